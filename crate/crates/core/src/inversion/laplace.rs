use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Bands, BAND_POINTS};
use crate::geometry::TrigShape;
use crate::{par, Error, Result};

/// `C_MAP = (μ/δ² M + GᵀG/δ²)⁻¹` for the real-stacked Jacobian `G`.
pub fn laplace_covariance(g: &DMatrix<f64>, mu: f64, delta: f64, penalty: &DVector<f64>) -> Result<DMatrix<f64>> {
    if !(delta > 0.0) || !(mu > 0.0) {
        return Err(Error::UndefinedPosterior);
    }
    let d2 = delta * delta;
    let mut h = g.transpose() * g / d2;
    for i in 0..h.nrows() {
        h[(i, i)] += mu * penalty[i] / d2;
    }
    let c = h.cholesky().ok_or(Error::NotSpd)?.inverse();
    Ok((&c + c.transpose()) * 0.5)
}

#[derive(Debug, Clone)]
pub struct LaSamples {
    pub samples: Vec<DVector<f64>>,
    pub q_bar: TrigShape,
    pub bands: Bands,
}

/// Draws `q_MAP + Lz` with `C_MAP = LLᵀ`; sample `j` uses stream `j` of the
/// seeded generator, so the result does not depend on the thread count.
pub fn la_sample(q_map: &TrigShape, c_map: &DMatrix<f64>, count: usize, seed: u64) -> Result<LaSamples> {
    let q = DVector::from_vec(q_map.coeffs());
    let p = q.len();
    if c_map.shape() != (p, p) {
        return Err(Error::Config(format!("covariance is {:?}, expected {p}x{p}", c_map.shape())));
    }
    if count == 0 {
        return Err(Error::Config("need at least one Laplace sample".into()));
    }
    let l = if c_map.iter().all(|&v| v == 0.0) {
        DMatrix::zeros(p, p)
    } else {
        c_map.clone().cholesky().ok_or(Error::NotSpd)?.l()
    };
    let samples = par::map_indexed(count, |j| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        let z = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
        &q + &l * z
    });
    let q_bar = samples.iter().fold(DVector::zeros(p), |acc, s| acc + s) / count as f64;
    let m = q_map.m();
    let q_bar = TrigShape::new_unchecked(q_bar.as_slice()[..=m].to_vec(), q_bar.as_slice()[m + 1..].to_vec())?;

    let t: Vec<f64> = (0..BAND_POINTS)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / BAND_POINTS as f64)
        .collect();
    let mut lower = Vec::with_capacity(BAND_POINTS);
    let mut upper = Vec::with_capacity(BAND_POINTS);
    let mut centre = Vec::with_capacity(BAND_POINTS);
    for &tk in &t {
        let g = DVector::from_vec(TrigShape::basis(m, tk));
        let sd = (g.dot(&(c_map * &g))).max(0.0).sqrt();
        let r = q_map.radius(tk);
        centre.push(r);
        lower.push(r - 1.96 * sd);
        upper.push(r + 1.96 * sd);
    }
    Ok(LaSamples {
        samples,
        q_bar,
        bands: Bands { t, q_map: centre, lower, upper },
    })
}
