//! Eigen-decomposition of the Neumann–Poincaré operator in the H* inner product.
//!
//! On the mean-zero subspace the Gram matrix `G = −W S` is symmetric positive
//! definite and `G K*` is symmetric up to the discrete Calderón defect, so the
//! spectrum is computed from the generalized symmetric problem
//! `sym(G K*) v = λ G v`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::layer_potentials::LayerOperators;
use crate::{Error, Result, C64};

/// Default number of retained modes.
pub const DEFAULT_MODES: usize = 12;

/// Relative asymmetry of `G K*` above which the discretization is rejected.
pub const ASYMMETRY_TOL: f64 = 1e-2;

/// Retained eigenpairs, sorted by `|λ_j|` descending.
#[derive(Debug, Clone)]
pub struct NpSpectrum {
    pub lambdas: Vec<f64>,
    /// H*-orthonormal, mean-zero node values.
    pub eigfuns: Vec<DVector<f64>>,
    /// `‖GK* − (GK*)ᵀ‖ / ‖GK*‖` of the discrete operator.
    pub asymmetry: f64,
    /// Eigenvalues of every discrete mode (not only the retained ones), sorted
    /// like `lambdas`.
    pub all_lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub shape: String,
    pub n: usize,
    pub lambdas: Vec<f64>,
}

impl NpSpectrum {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn eigfun_complex(&self, j: usize) -> DVector<C64> {
        self.eigfuns[j].map(|v| C64::new(v, 0.0))
    }
}

/// Orthonormal basis (columns) of `{φ : wᵀφ = 0}` via a Householder reflector.
fn mean_zero_basis(w: &[f64]) -> DMatrix<f64> {
    let n = w.len();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut v = DVector::from_column_slice(w);
    v[0] += w[0].signum() * norm;
    let vv = v.dot(&v);
    DMatrix::from_fn(n, n - 1, |i, j| {
        let col = j + 1;
        let delta = if i == col { 1.0 } else { 0.0 };
        delta - 2.0 * v[i] * v[col] / vv
    })
}

/// Eigenpairs of the discrete `K*_D` restricted to mean-zero densities.
pub fn np_spectrum(ops: &LayerOperators<'_>, modes: usize) -> Result<NpSpectrum> {
    let curve = ops.curve;
    let n = curve.n();
    if modes == 0 || modes >= n / 2 {
        return Err(Error::Config(format!("retained modes must be in [1, {}), got {modes}", n / 2)));
    }
    let w = DMatrix::from_diagonal(&DVector::from_column_slice(&curve.weights));
    let gram = -(&w * &ops.single.entries);
    let gram = (&gram + gram.transpose()) * 0.5;
    let a = &gram * &ops.np_star.entries;
    let asymmetry = (&a - a.transpose()).norm() / a.norm().max(f64::MIN_POSITIVE);
    if asymmetry > ASYMMETRY_TOL {
        return Err(Error::DiscretizationTooCoarse(format!(
            "H*-asymmetry of K* is {asymmetry:.2e}"
        )));
    }
    let a = (&a + a.transpose()) * 0.5;

    let q = mean_zero_basis(&curve.weights);
    let a_r = q.transpose() * &a * &q;
    let b_r = q.transpose() * &gram * &q;
    let chol = b_r.cholesky().ok_or_else(|| {
        Error::DiscretizationTooCoarse("H* Gram matrix is not positive definite".into())
    })?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DiscretizationTooCoarse("singular Gram factor".into()))?;
    let c = &l_inv * a_r * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .abs()
            .total_cmp(&eig.eigenvalues[i].abs())
            .then(eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]))
    });
    let back = q * l_inv.transpose();
    let mut lambdas = Vec::with_capacity(modes);
    let mut eigfuns = Vec::with_capacity(modes);
    for &k in order.iter().take(modes) {
        let mut phi = &back * eig.eigenvectors.column(k);
        fix_sign(&mut phi);
        lambdas.push(eig.eigenvalues[k]);
        eigfuns.push(phi);
    }
    Ok(NpSpectrum {
        lambdas,
        eigfuns,
        asymmetry,
        all_lambdas: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
    })
}

/// Makes the entry of largest magnitude positive.
fn fix_sign(phi: &mut DVector<f64>) {
    let imax = phi.iamax();
    if phi[imax] < 0.0 {
        phi.neg_mut();
    }
}

/// `min_j |λ − λ_j|`, optionally including the accumulation point 0.
pub fn spectral_distance(lambda: C64, spec: &NpSpectrum, include_zero: bool) -> Result<f64> {
    if spec.is_empty() && !include_zero {
        return Err(Error::EmptySpectrum);
    }
    let mut d = spec
        .lambdas
        .iter()
        .map(|&l| (lambda - l).norm())
        .fold(f64::INFINITY, f64::min);
    if include_zero {
        d = d.min(lambda.norm());
    }
    Ok(d)
}

/// Re-orthonormalizes fields in the H* inner product (modified Gram–Schmidt).
pub fn hstar_orthonormalize(ops: &LayerOperators<'_>, funs: &mut [DVector<f64>]) {
    let to_c = |v: &DVector<f64>| v.map(|x| C64::new(x, 0.0));
    for j in 0..funs.len() {
        for i in 0..j {
            let proj = ops.energy_form(&to_c(&funs[j]), &to_c(&funs[i])).re;
            let prev = funs[i].clone();
            funs[j].axpy(-proj, &prev, 1.0);
        }
        let norm = ops.energy_form(&to_c(&funs[j]), &to_c(&funs[j])).re.sqrt();
        funs[j] /= norm;
        fix_sign(&mut funs[j]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{discretize, DiscreteCurve, Ellipse, StarShape, TrigShape};

    fn gram_error(ops: &LayerOperators<'_>, spec: &NpSpectrum) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..spec.len() {
            for j in 0..spec.len() {
                let v = ops
                    .energy_form(&spec.eigfun_complex(i), &spec.eigfun_complex(j))
                    .re;
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    #[test]
    fn disk_spectrum_is_zero() {
        let c = discretize(&StarShape::Trig(TrigShape::circle(0.5, 0).unwrap()), 80).unwrap();
        let ops = LayerOperators::new(&c);
        let spec = np_spectrum(&ops, 12).unwrap();
        assert!(spec.lambdas.iter().all(|l| l.abs() < 1e-8));
        assert!(gram_error(&ops, &spec) < 1e-8);
    }

    #[test]
    fn ellipse_spectrum() {
        let c = DiscreteCurve::from_curve(&Ellipse { a: 1.0, b: 0.5 }, 128).unwrap();
        let ops = LayerOperators::new(&c);
        let spec = np_spectrum(&ops, 10).unwrap();
        for k in 1..=5 {
            let target = 0.5 * (1.0f64 / 3.0).powi(k as i32);
            let pair = &spec.lambdas[2 * (k - 1)..2 * k];
            let mut pair = pair.to_vec();
            pair.sort_by(f64::total_cmp);
            assert!((pair[0] + target).abs() < 1e-6, "k={k} {pair:?}");
            assert!((pair[1] - target).abs() < 1e-6, "k={k} {pair:?}");
        }
        assert!(gram_error(&ops, &spec) < 1e-8);
        assert!(spec.lambdas.iter().all(|l| l.abs() < 0.5 + 1e-6));
    }

    #[test]
    fn eigenfunctions_are_mean_zero_and_sign_fixed() {
        let c = discretize(&StarShape::Bean, 64).unwrap();
        let ops = LayerOperators::new(&c);
        let spec = np_spectrum(&ops, 8).unwrap();
        assert!(spec.asymmetry > 1e-4);
        for phi in &spec.eigfuns {
            let mean: f64 = phi.iter().zip(&c.weights).map(|(p, w)| p * w).sum();
            assert!(mean.abs() < 1e-12);
            assert!(phi[phi.iamax()] > 0.0);
        }
    }

    #[test]
    fn orthonormalization_is_idempotent() {
        let c = discretize(&StarShape::Peanut, 64).unwrap();
        let ops = LayerOperators::new(&c);
        let spec = np_spectrum(&ops, 6).unwrap();
        let mut funs = spec.eigfuns.clone();
        hstar_orthonormalize(&ops, &mut funs);
        for (a, b) in funs.iter().zip(&spec.eigfuns) {
            assert!((a - b).amax() < 1e-8);
        }
    }

    #[test]
    fn distance() {
        let c = discretize(&StarShape::Peanut, 64).unwrap();
        let ops = LayerOperators::new(&c);
        let spec = np_spectrum(&ops, 12).unwrap();
        let l1 = spec.lambdas[0];
        assert_eq!(spectral_distance(C64::new(l1, 0.0), &spec, true).unwrap(), 0.0);
        assert!(spectral_distance(C64::new(2.0, 0.0), &spec, false).unwrap() >= 1.5);
        let empty = NpSpectrum { lambdas: vec![], eigfuns: vec![], asymmetry: 0.0, all_lambdas: vec![] };
        assert!(matches!(
            spectral_distance(C64::new(0.1, 0.0), &empty, false),
            Err(Error::EmptySpectrum)
        ));
        assert_eq!(spectral_distance(C64::new(0.1, 0.0), &empty, true).unwrap(), 0.1);
    }

    #[test]
    fn coarse_bean_is_rejected() {
        let c = discretize(&StarShape::Bean, 16).unwrap();
        let ops = LayerOperators::new(&c);
        assert!(matches!(np_spectrum(&ops, 4), Err(Error::DiscretizationTooCoarse(_))));
    }

    #[test]
    fn rejects_too_many_modes() {
        let c = discretize(&StarShape::Bean, 32).unwrap();
        let ops = LayerOperators::new(&c);
        assert!(np_spectrum(&ops, 16).is_err());
    }
}
