//! Regularized Levenberg–Marquardt reconstruction with a Laplace approximation
//! of the posterior.

mod laplace;
mod report;

pub use laplace::{la_sample, laplace_covariance, LaSamples};
pub use report::{relative_error, svd_report, SvdReport};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::forward::{stack, FarFieldData, IncidentField, MeasurementGrid};
use crate::geometry::{discretize, StarShape, TrigShape};
use crate::layer_potentials::check_exterior;
use crate::sensitivity::{jacobian, JacobianMethod};
use crate::{forward, Error, Result, C64};

/// Default number of trigonometric modes of reconstructed shapes.
pub const DEFAULT_MODES: usize = 8;
/// Default Nyström size for the inversion.
pub const DEFAULT_N_INVERSE: usize = 64;
/// Default Nyström size for synthetic data.
pub const DEFAULT_N_FORWARD: usize = 80;
const MAX_HALVINGS: usize = 20;
/// Smallest radius an iterate may have, leaving room for finite-difference probes.
const MIN_RADIUS: f64 = 1e-2;
/// Angles at which confidence bands are reported.
pub const BAND_POINTS: usize = 256;

/// Diagonal weighting of the coefficient penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    /// `μ‖q‖²` on the coefficient vector.
    #[default]
    Identity,
    /// `μ‖q‖²_{L²[0,2π]}`, i.e. weights `2π` on `a0` and `π` elsewhere.
    Parseval,
}

impl Penalty {
    pub fn weights(self, p: usize) -> DVector<f64> {
        match self {
            Self::Identity => DVector::from_element(p, 1.0),
            Self::Parseval => DVector::from_fn(p, |i, _| if i == 0 { 2.0 * std::f64::consts::PI } else { std::f64::consts::PI }),
        }
    }
}

/// Fixed regularization parameter or a seeded draw from `U(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuChoice {
    Fixed(f64),
    Uniform,
}

impl MuChoice {
    pub fn resolve(self, seed: u64) -> f64 {
        match self {
            Self::Fixed(mu) => mu,
            Self::Uniform => ChaCha8Rng::seed_from_u64(seed ^ 0x6d75_5f75_6e69_666f).random::<f64>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub mu: f64,
    pub delta: f64,
    pub max_iter: usize,
    pub eps_stop: f64,
    pub m: usize,
    pub n_inverse: usize,
    pub jacobian: JacobianMethod,
    pub penalty: Penalty,
    pub incident: IncidentField,
    /// Laplace samples drawn after convergence (0 skips sampling).
    pub samples: usize,
    pub seed: u64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            mu: 0.01,
            delta: 0.01,
            max_iter: 100,
            eps_stop: 1e-5,
            m: DEFAULT_MODES,
            n_inverse: DEFAULT_N_INVERSE,
            jacobian: JacobianMethod::default(),
            penalty: Penalty::Identity,
            incident: IncidentField::x1(),
            samples: 0,
            seed: 0,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) {
            return Err(Error::Config(format!("mu must be non-negative, got {}", self.mu)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.delta >= 0.0) || !(self.eps_stop > 0.0) {
            return Err(Error::Config("delta must be >= 0 and eps_stop > 0".into()));
        }
        Ok(())
    }
}

/// Pointwise 95% band of the radial function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub t: Vec<f64>,
    pub q_map: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bands {
    pub fn mean_width(&self) -> f64 {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).sum::<f64>() / self.t.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub c_map: Vec<Vec<f64>>,
    pub q_bar: TrigShape,
    pub bands: Bands,
    pub samples: usize,
    /// `‖q̄ − q_MAP‖`.
    pub mean_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionRun {
    pub q_map: TrigShape,
    pub iterates: Vec<TrigShape>,
    pub step_norms: Vec<f64>,
    pub e_gamma_history: Vec<f64>,
    pub converged: bool,
    pub mu: f64,
    /// Singular values of the stacked Jacobian at `q_map`.
    pub singular_values: Vec<f64>,
    pub posterior: Option<Posterior>,
}

impl ReconstructionRun {
    pub fn iterations(&self) -> usize {
        self.step_norms.len()
    }
}

/// `[Re G; Im G]`.
pub fn stack_matrix(g: &DMatrix<C64>) -> DMatrix<f64> {
    let (r, c) = g.shape();
    DMatrix::from_fn(2 * r, c, |i, j| if i < r { g[(i, j)].re } else { g[(i - r, j)].im })
}

struct Problem<'a> {
    lambda: C64,
    grid: MeasurementGrid,
    cfg: &'a InversionConfig,
}

impl Problem<'_> {
    fn feasible(&self, coeffs: &[f64]) -> Option<TrigShape> {
        let shape = TrigShape::from_coeffs(coeffs).ok()?;
        let star = StarShape::Trig(shape.clone());
        let min = (0..BAND_POINTS)
            .map(|k| shape.radius(2.0 * std::f64::consts::PI * k as f64 / BAND_POINTS as f64))
            .fold(f64::INFINITY, f64::min);
        let ok = min > MIN_RADIUS
            && star.check_star_shaped().is_ok()
            && star.max_radius() < self.grid.radius
            && discretize(&star, self.cfg.n_inverse)
                .and_then(|c| check_exterior(&c, self.grid.points()))
                .is_ok();
        ok.then_some(shape)
    }

    fn forward(&self, shape: &TrigShape) -> Result<Vec<C64>> {
        let curve = discretize(&StarShape::Trig(shape.clone()), self.cfg.n_inverse)?;
        forward::scattered_field(&curve, self.lambda, &self.cfg.incident, &self.grid)
    }

    fn jacobian(&self, shape: &TrigShape) -> Result<DMatrix<f64>> {
        let g = jacobian(shape, self.cfg.n_inverse, self.lambda, &self.cfg.incident, &self.grid, self.cfg.jacobian)?;
        Ok(stack_matrix(&g))
    }
}

/// Solves `(GᵀG + μM) δq = Gᵀr`.
fn lm_step(g: &DMatrix<f64>, r: &DVector<f64>, mu: f64, penalty: &DVector<f64>) -> Result<DVector<f64>> {
    let mut a = g.transpose() * g;
    for i in 0..a.nrows() {
        a[(i, i)] += mu * penalty[i];
    }
    let rhs = g.transpose() * r;
    match a.clone().cholesky() {
        Some(ch) => Ok(ch.solve(&rhs)),
        None if mu == 0.0 => Err(Error::RegularizationRequired),
        None => Err(Error::NotSpd),
    }
    .and_then(|dq| {
        if mu == 0.0 {
            let s = a.clone().symmetric_eigenvalues();
            let (lo, hi) = s.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            if !(lo > 1e-14 * hi) {
                return Err(Error::RegularizationRequired);
            }
        }
        Ok(dq)
    })
}

/// Levenberg–Marquardt iteration from `q0` towards the data.
///
/// `truth` only feeds the error history.
pub fn lm_reconstruct(
    data: &FarFieldData,
    q0: &TrigShape,
    cfg: &InversionConfig,
    truth: Option<&StarShape>,
) -> Result<ReconstructionRun> {
    cfg.validate()?;
    let problem = Problem {
        lambda: data.lambda,
        grid: MeasurementGrid::new(data.radius, data.count)?,
        cfg,
    };
    let target = stack(&data.values);
    let penalty = cfg.penalty.weights(2 * cfg.m + 1);
    let mut q = q0.with_modes(cfg.m)?;
    let error_of = |q: &TrigShape| -> Result<Option<f64>> {
        truth.map(|t| relative_error(&StarShape::Trig(q.clone()), t)).transpose()
    };

    let mut iterates = vec![q.clone()];
    let mut e_hist: Vec<f64> = error_of(&q)?.into_iter().collect();
    let mut step_norms = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let f = stack(&problem.forward(&q)?);
        let r = &target - f;
        let g = problem.jacobian(&q)?;
        let mut dq = lm_step(&g, &r, cfg.mu, &penalty)?;
        let coeffs = DVector::from_vec(q.coeffs());
        let mut next = None;
        for _ in 0..=MAX_HALVINGS {
            if let Some(s) = problem.feasible((&coeffs + &dq).as_slice()) {
                next = Some(s);
                break;
            }
            dq *= 0.5;
        }
        let Some(next) = next else {
            return Err(Error::Divergence(format!(
                "iterate {} left the admissible set after {MAX_HALVINGS} halvings",
                step_norms.len() + 1
            )));
        };
        let norm = dq.norm();
        q = next;
        step_norms.push(norm);
        iterates.push(q.clone());
        e_hist.extend(error_of(&q)?);
        if norm < cfg.eps_stop {
            converged = true;
            break;
        }
    }

    let g = problem.jacobian(&q)?;
    let singular_values = svd_report(&g, None).singular_values;
    let posterior = if cfg.delta > 0.0 && cfg.mu > 0.0 && cfg.samples > 0 {
        let c = laplace_covariance(&g, cfg.mu, cfg.delta, &penalty)?;
        let la = la_sample(&q, &c, cfg.samples, cfg.seed)?;
        Some(Posterior {
            c_map: (0..c.nrows()).map(|i| c.row(i).iter().copied().collect()).collect(),
            mean_offset: DVector::from_vec(la.q_bar.coeffs()).metric_distance(&DVector::from_vec(q.coeffs())),
            q_bar: la.q_bar,
            bands: la.bands,
            samples: cfg.samples,
        })
    } else {
        None
    };
    Ok(ReconstructionRun {
        q_map: q,
        iterates,
        step_norms,
        e_gamma_history: e_hist,
        converged,
        mu: cfg.mu,
        singular_values,
        posterior,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::forward_map;

    fn disk(r: f64) -> StarShape {
        StarShape::Trig(TrigShape::circle(r, 0).unwrap())
    }

    #[test]
    fn noiseless_exact_model() {
        let grid = MeasurementGrid::new(3.0, 32).unwrap();
        let lambda = C64::new(0.0, -8e-3);
        let cfg = InversionConfig { mu: 1e-8, delta: 0.0, m: 2, n_inverse: 32, ..Default::default() };
        let data = forward_map(&disk(0.5), 32, lambda, &cfg.incident, &grid).unwrap();
        let run = lm_reconstruct(&data, &TrigShape::circle(0.6, 2).unwrap(), &cfg, Some(&disk(0.5))).unwrap();
        assert!(run.converged);
        assert!(*run.e_gamma_history.last().unwrap() < 1e-6, "{:?}", run.e_gamma_history);
        assert_eq!(run.iterates.len(), run.step_norms.len() + 1);
    }

    #[test]
    fn single_iteration() {
        let grid = MeasurementGrid::new(3.0, 16).unwrap();
        let cfg = InversionConfig { max_iter: 1, m: 1, n_inverse: 32, ..Default::default() };
        let data = forward_map(&disk(0.5), 48, C64::new(2.0, 0.0), &cfg.incident, &grid).unwrap();
        let run = lm_reconstruct(&data, &TrigShape::circle(0.6, 1).unwrap(), &cfg, None).unwrap();
        assert_eq!(run.step_norms.len(), 1);
        assert!(run.e_gamma_history.is_empty());
    }

    #[test]
    fn zero_mu_with_rank_deficient_jacobian() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r = DVector::from_vec(vec![1.0, 1.0]);
        let w = Penalty::Identity.weights(2);
        assert!(matches!(lm_step(&g, &r, 0.0, &w), Err(Error::RegularizationRequired)));
        assert!(lm_step(&g, &r, 0.1, &w).is_ok());
    }

    #[test]
    fn mu_choice() {
        assert_eq!(MuChoice::Fixed(0.3).resolve(5), 0.3);
        let a = MuChoice::Uniform.resolve(5);
        assert_eq!(a, MuChoice::Uniform.resolve(5));
        assert!((0.0..1.0).contains(&a));
        assert_ne!(a, MuChoice::Uniform.resolve(6));
    }

    #[test]
    fn parseval_weights() {
        let w = Penalty::Parseval.weights(3);
        assert!((w[0] - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert!((w[2] - std::f64::consts::PI).abs() < 1e-15);
    }
}
