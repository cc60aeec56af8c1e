//! Nyström discretization of the Laplace layer potentials on a closed curve.
//!
//! The single layer uses the periodic logarithmic splitting
//! `ln|x(t) − x(s)|² = ln(4 sin²((t−s)/2)) + smooth` with the classical
//! trigonometric interpolation weights for the singular factor; the
//! Neumann–Poincaré kernel is smooth on C² curves and uses the plain
//! trapezoidal rule with its curvature limit on the diagonal.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::geometry::DiscreteCurve;
use crate::{par, Error, Point, Result, C64};

/// Relative tolerance of the mean-zero check on boundary fields.
pub const MEAN_ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    SingleLayer,
    NpStar,
    Np,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// Log-split product integration.
    PeriodicLog,
    /// Trapezoidal rule with the analytic diagonal limit.
    Trapezoid,
    /// Weighted transpose of another matrix.
    WeightedTranspose,
}

/// Real Nyström matrix acting on node values.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub entries: DMatrix<f64>,
    pub kind: OperatorKind,
    pub quadrature: Quadrature,
}

impl OperatorMatrix {
    /// Applies the real matrix to a complex field.
    pub fn apply(&self, field: &DVector<C64>) -> DVector<C64> {
        let re = &self.entries * field.map(|c| c.re);
        let im = &self.entries * field.map(|c| c.im);
        DVector::from_fn(field.len(), |i, _| C64::new(re[i], im[i]))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }
}

/// Density or trace sampled at the curve nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    pub values: DVector<C64>,
    pub mean_zero: bool,
}

impl BoundaryField {
    pub fn new(values: DVector<C64>) -> Self {
        Self { values, mean_zero: false }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0))))
    }

    /// Checks the weighted mean and tags the field as mean-zero.
    pub fn mean_zero(curve: &DiscreteCurve, values: DVector<C64>) -> Result<Self> {
        let rel = relative_mean(curve, &values);
        if rel > MEAN_ZERO_TOL {
            return Err(Error::NotMeanZero(rel));
        }
        Ok(Self { values, mean_zero: true })
    }

    /// Removes the weighted mean, `φ − (∮φ dσ / |∂D|)`.
    pub fn project_mean_zero(curve: &DiscreteCurve, mut values: DVector<C64>) -> Self {
        let mean = curve.integrate(values.as_slice()) / curve.length();
        values.iter_mut().for_each(|v| *v -= mean);
        Self { values, mean_zero: true }
    }
}

/// `|∮ φ dσ| / (|∂D|^{1/2} ‖φ‖_{L²})`.
pub fn relative_mean(curve: &DiscreteCurve, values: &DVector<C64>) -> f64 {
    let norm = l2_norm(curve, values);
    if norm == 0.0 {
        return 0.0;
    }
    curve.integrate(values.as_slice()).norm() / (curve.length().sqrt() * norm)
}

/// Weighted `L²(∂D)` norm.
pub fn l2_norm(curve: &DiscreteCurve, values: &DVector<C64>) -> f64 {
    values
        .iter()
        .zip(&curve.weights)
        .map(|(v, w)| v.norm_sqr() * w)
        .sum::<f64>()
        .sqrt()
}

/// Weights of the product rule for `∫ ln(4 sin²((t−s)/2)) f(s) ds`, indexed by
/// the node offset `|i − j|`.
pub fn log_weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    let hf = half as f64;
    (0..n)
        .map(|d| {
            let arg = PI * d as f64 / hf;
            let mut sum = 0.0;
            for m in 1..half {
                sum += (m as f64 * arg).cos() / m as f64;
            }
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * PI / hf * sum - PI / (hf * hf) * sign
        })
        .collect()
}

/// Nyström matrix of `S_D[φ](x) = ∫ (1/2π) ln|x−y| φ(y) dσ(y)` on the curve.
pub fn assemble_single_layer(curve: &DiscreteCurve) -> OperatorMatrix {
    let n = curve.n();
    let rw = log_weights(n);
    let h = 2.0 * PI / n as f64;
    let rows = par::map_indexed(n, |i| {
        let ti = curve.t[i];
        (0..n)
            .map(|j| {
                let jac = curve.jacobian[j];
                let smooth = if i == j {
                    (jac * jac).ln()
                } else {
                    let d2 = (curve.x[i] - curve.x[j]).norm_squared();
                    let s = (0.5 * (ti - curve.t[j])).sin();
                    (d2 / (4.0 * s * s)).ln()
                };
                let offset = i.abs_diff(j);
                jac / (4.0 * PI) * (rw[offset] + h * smooth)
            })
            .collect::<Vec<f64>>()
    });
    OperatorMatrix {
        entries: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
        kind: OperatorKind::SingleLayer,
        quadrature: Quadrature::PeriodicLog,
    }
}

/// Nyström matrix of `K*_D[φ](x) = (1/2π) ∫ ⟨x−y, ν(x)⟩/|x−y|² φ(y) dσ(y)`.
pub fn assemble_np_star(curve: &DiscreteCurve) -> OperatorMatrix {
    let n = curve.n();
    let rows = par::map_indexed(n, |i| {
        (0..n)
            .map(|j| {
                if i == j {
                    curve.curvature[i] / (4.0 * PI) * curve.weights[i]
                } else {
                    let d = curve.x[i] - curve.x[j];
                    d.dot(&curve.normal[i]) / (2.0 * PI * d.norm_squared()) * curve.weights[j]
                }
            })
            .collect::<Vec<f64>>()
    });
    OperatorMatrix {
        entries: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
        kind: OperatorKind::NpStar,
        quadrature: Quadrature::Trapezoid,
    }
}

/// `K = W⁻¹ (K*)ᵀ W`, the discrete `L²(∂D)` adjoint of `K*`.
pub fn np_adjoint(curve: &DiscreteCurve, np_star: &OperatorMatrix) -> OperatorMatrix {
    let w = &curve.weights;
    let n = curve.n();
    OperatorMatrix {
        entries: DMatrix::from_fn(n, n, |i, j| np_star.entries[(j, i)] * w[j] / w[i]),
        kind: OperatorKind::Np,
        quadrature: Quadrature::WeightedTranspose,
    }
}

/// Single layer and Neumann–Poincaré matrices of one curve.
#[derive(Debug, Clone)]
pub struct LayerOperators<'a> {
    pub curve: &'a DiscreteCurve,
    pub single: OperatorMatrix,
    pub np_star: OperatorMatrix,
}

impl<'a> LayerOperators<'a> {
    pub fn new(curve: &'a DiscreteCurve) -> Self {
        Self {
            curve,
            single: assemble_single_layer(curve),
            np_star: assemble_np_star(curve),
        }
    }

    pub fn np(&self) -> OperatorMatrix {
        np_adjoint(self.curve, &self.np_star)
    }

    /// `d/ds` of node values.
    pub fn d_ds(&self, values: &DVector<C64>) -> DVector<C64> {
        DVector::from_vec(self.curve.tangential_derivative(values.as_slice()))
    }

    /// `∂_ν D_D[ψ]` on the curve via `d/ds S_D[dψ/ds]`.
    pub fn normal_derivative_double_layer(&self, psi: &DVector<C64>) -> DVector<C64> {
        let dpsi = self.d_ds(psi);
        self.d_ds(&self.single.apply(&dpsi))
    }

    /// Symmetric bilinear form `−∮ φ S_D[ψ] dσ` without mean-zero checks.
    ///
    /// Linear in `phi`, conjugate-linear in `psi`.
    pub fn energy_form(&self, phi: &DVector<C64>, psi: &DVector<C64>) -> C64 {
        let s_psi = self.single.apply(psi);
        -phi.iter()
            .zip(s_psi.iter())
            .zip(&self.curve.weights)
            .map(|((a, b), &w)| a * b.conj() * w)
            .sum::<C64>()
    }

    /// H* inner product `⟨φ, ψ⟩ = −⟨φ, S_D[ψ]⟩` of two mean-zero fields.
    pub fn hstar_inner(&self, phi: &BoundaryField, psi: &BoundaryField) -> Result<C64> {
        for f in [phi, psi] {
            let rel = relative_mean(self.curve, &f.values);
            if rel > MEAN_ZERO_TOL {
                return Err(Error::NotMeanZero(rel));
            }
        }
        Ok(self.energy_form(&phi.values, &psi.values))
    }
}

/// `S_D[φ](x) = ∫ (1/2π) ln|x−y| φ(y) dσ(y)`.
pub fn green(x: &Point, y: &Point) -> f64 {
    (x - y).norm().ln() / (2.0 * PI)
}

/// `∂Γ(x, y)/∂ν(y)`.
pub fn green_normal_derivative(x: &Point, y: &Point, normal_y: &Point) -> f64 {
    let d = y - x;
    d.dot(normal_y) / (2.0 * PI * d.norm_squared())
}

/// Checks that `pts` lie outside the curve and at least one node spacing away.
pub fn check_exterior(curve: &DiscreteCurve, pts: &[Point]) -> Result<()> {
    let spacing = curve.max_spacing();
    for (index, p) in pts.iter().enumerate() {
        let near = curve.x.iter().any(|y| (p - y).norm() < spacing);
        if near || curve.contains(p) {
            return Err(Error::NearBoundary { index });
        }
    }
    Ok(())
}

/// Trapezoidal evaluation of `S_D[φ]` at points away from the curve.
pub fn eval_exterior(curve: &DiscreteCurve, phi: &DVector<C64>, pts: &[Point]) -> Result<Vec<C64>> {
    check_exterior(curve, pts)?;
    Ok(pts
        .iter()
        .map(|p| {
            curve
                .x
                .iter()
                .zip(&curve.weights)
                .zip(phi.iter())
                .map(|((y, &w), f)| f * (green(p, y) * w))
                .sum()
        })
        .collect())
}
