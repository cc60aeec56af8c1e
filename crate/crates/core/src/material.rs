//! Drude permittivity, the contrast parameter and resonance frequencies.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Vacuum permittivity in F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;

const SCAN_POINTS: usize = 4096;
const BISECT_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrudeParams {
    pub eps0: f64,
    pub omega_p: f64,
    pub gamma: f64,
}

impl DrudeParams {
    pub fn new(omega_p: f64, gamma: f64) -> Result<Self> {
        Self::with_eps0(EPS0, omega_p, gamma)
    }

    pub fn with_eps0(eps0: f64, omega_p: f64, gamma: f64) -> Result<Self> {
        if !(omega_p > 0.0) || !(gamma >= 0.0) || !(eps0 > 0.0) {
            return Err(Error::Domain(format!(
                "Drude parameters need omega_p > 0, gamma >= 0, eps0 > 0 (got {omega_p}, {gamma}, {eps0})"
            )));
        }
        Ok(Self { eps0, omega_p, gamma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Inclusion {
    Direct { eps_d: C64 },
    Drude { params: DrudeParams, omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialConfig {
    pub eps_m: f64,
    pub inclusion: Inclusion,
}

impl MaterialConfig {
    pub fn new(eps_m: f64, inclusion: Inclusion) -> Result<Self> {
        if !(eps_m > 0.0) {
            return Err(Error::Domain(format!("background permittivity must be positive, got {eps_m}")));
        }
        if let Inclusion::Drude { omega, .. } = inclusion {
            if !(omega > 0.0) {
                return Err(Error::Domain(format!("frequency must be positive, got {omega}")));
            }
        }
        Ok(Self { eps_m, inclusion })
    }

    pub fn eps_d(&self) -> Result<C64> {
        match self.inclusion {
            Inclusion::Direct { eps_d } => Ok(eps_d),
            Inclusion::Drude { params, omega } => drude_permittivity(&params, omega),
        }
    }

    pub fn lambda(&self) -> Result<C64> {
        contrast_lambda(self.eps_d()?, self.eps_m)
    }
}

/// `ε₀(1 − ω_p²/(ω(ω + iγ)))`.
pub fn drude_permittivity(p: &DrudeParams, omega: f64) -> Result<C64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {omega}")));
    }
    let denom = C64::new(omega * omega, omega * p.gamma);
    Ok(p.eps0 * (1.0 - p.omega_p * p.omega_p / denom))
}

/// `(ε_D + ε_m) / (2(ε_D − ε_m))`.
pub fn contrast_lambda(eps_d: C64, eps_m: f64) -> Result<C64> {
    let diff = eps_d - eps_m;
    if diff.norm() <= f64::EPSILON * eps_m.abs().max(eps_d.norm()) {
        return Err(Error::SingularContrast);
    }
    Ok((eps_d + eps_m) / (2.0 * diff))
}

/// Frequency at which `Re ε_D = −ε_m`, or `None` if the damping is too strong.
pub fn frohlich_frequency(p: &DrudeParams, eps_m: f64) -> Option<f64> {
    let w2 = p.omega_p * p.omega_p * p.eps0 / (p.eps0 + eps_m) - p.gamma * p.gamma;
    (w2 > 0.0).then(|| w2.sqrt())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Resonance {
    pub mode: usize,
    pub lambda_j: f64,
    /// Every root of `Re λ(ω) = λ_j` in `(0, ω_p)`; empty when the mode is
    /// non-resonant.
    pub roots: Vec<ResonanceRoot>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResonanceRoot {
    pub omega: f64,
    pub lambda: C64,
}

/// Solves `Re λ(ω) = λ_j` on `(0, ω_p)` for each eigenvalue.
pub fn resonance_frequencies(p: &DrudeParams, eps_m: f64, lambdas: &[f64]) -> Result<Vec<Resonance>> {
    if !(eps_m > 0.0) {
        return Err(Error::Domain(format!("background permittivity must be positive, got {eps_m}")));
    }
    let re_lambda = |w: f64| -> Option<f64> {
        drude_permittivity(p, w)
            .ok()
            .and_then(|e| contrast_lambda(e, eps_m).ok())
            .map(|l| l.re)
    };
    let grid: Vec<f64> = (1..SCAN_POINTS)
        .map(|k| p.omega_p * k as f64 / SCAN_POINTS as f64)
        .collect();
    let values: Vec<Option<f64>> = grid.iter().map(|&w| re_lambda(w)).collect();

    let mut out = Vec::with_capacity(lambdas.len());
    for (mode, &target) in lambdas.iter().enumerate() {
        let mut roots = Vec::new();
        for k in 0..grid.len() - 1 {
            let (Some(fa), Some(fb)) = (values[k], values[k + 1]) else { continue };
            let (fa, fb) = (fa - target, fb - target);
            if fa == 0.0 {
                roots.push(grid[k]);
                continue;
            }
            if fa * fb >= 0.0 {
                continue;
            }
            let (mut a, mut b, mut fa) = (grid[k], grid[k + 1], fa);
            while (b - a) > BISECT_RTOL * b {
                let mid = 0.5 * (a + b);
                let Some(fm) = re_lambda(mid) else { break };
                let fm = fm - target;
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fa * fm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        let roots = roots
            .into_iter()
            .map(|omega| {
                let lambda = contrast_lambda(drude_permittivity(p, omega)?, eps_m)?;
                Ok(ResonanceRoot { omega, lambda })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(Resonance { mode, lambda_j: target, roots });
    }
    Ok(out)
}
