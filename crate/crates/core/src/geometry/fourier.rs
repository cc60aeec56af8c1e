//! Trigonometric differentiation of periodic node samples.

use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

/// FFT-based derivative of samples on the equispaced grid `t_i = 2πi/n`.
#[derive(Clone)]
pub struct SpectralDiff {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralDiff").field("n", &self.n).finish()
    }
}

impl SpectralDiff {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `order`-th derivative with respect to the parameter `t`.
    ///
    /// For even `n` the Nyquist coefficient is dropped for odd orders, which keeps
    /// the derivative of real data real.
    pub fn derivative(&self, values: &[C64], order: u32) -> Vec<C64> {
        assert_eq!(values.len(), self.n, "sample count does not match the plan");
        let n = self.n;
        let mut buf = values.to_vec();
        self.forward.process(&mut buf);
        let scale = 1.0 / n as f64;
        for (j, c) in buf.iter_mut().enumerate() {
            let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            let factor = if n.is_multiple_of(2) && j == n / 2 && !order.is_multiple_of(2) {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, k).powu(order)
            };
            *c *= factor * scale;
        }
        self.inverse.process(&mut buf);
        buf
    }

    /// Derivative of real samples.
    pub fn derivative_real(&self, values: &[f64], order: u32) -> Vec<f64> {
        let z: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.derivative(&z, order).into_iter().map(|c| c.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exact_for_resolved_modes() {
        let n = 32;
        let diff = SpectralDiff::new(n);
        let t: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        for k in 1..n / 2 {
            let kf = k as f64;
            let f: Vec<f64> = t.iter().map(|&s| (kf * s).sin() + 0.5 * (kf * s).cos()).collect();
            let d1 = diff.derivative_real(&f, 1);
            let d2 = diff.derivative_real(&f, 2);
            for (i, &s) in t.iter().enumerate() {
                let e1 = kf * (kf * s).cos() - 0.5 * kf * (kf * s).sin();
                let e2 = -kf * kf * f[i];
                assert!((d1[i] - e1).abs() < 1e-10 * kf.max(1.0), "k={k}");
                assert!((d2[i] - e2).abs() < 1e-10 * kf * kf, "k={k}");
            }
        }
    }

    #[test]
    fn constant_has_zero_derivative() {
        let diff = SpectralDiff::new(16);
        let d = diff.derivative_real(&[3.0; 16], 1);
        assert!(d.iter().all(|v| v.abs() < 1e-14));
    }
}
