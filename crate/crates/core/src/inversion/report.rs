use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::geometry::StarShape;
use crate::{Error, Result};

const ERROR_QUADRATURE: usize = 2048;

/// `‖q_est − q_true‖_{L²[0,2π]} / ‖q_true‖_{L²[0,2π]}` of the radial functions.
pub fn relative_error(est: &StarShape, truth: &StarShape) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..ERROR_QUADRATURE {
        let t = 2.0 * std::f64::consts::PI * k as f64 / ERROR_QUADRATURE as f64;
        let r = truth.radius(t);
        num += (est.radius(t) - r).powi(2);
        den += r * r;
    }
    if den == 0.0 {
        return Err(Error::Domain("reference shape has zero norm".into()));
    }
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdReport {
    /// Descending.
    pub singular_values: Vec<f64>,
    /// `|u_iᵀξ| / s_i`, the size of the `i`-th term `(1/s_i) v_i u_iᵀ ξ` of the
    /// estimator error; empty without a noise vector.
    pub error_terms: Vec<f64>,
}

/// Singular values of `G` and, given a noise vector, the mode-wise error terms.
pub fn svd_report(g: &DMatrix<f64>, noise: Option<&DVector<f64>>) -> SvdReport {
    let svd = g.clone().svd(true, false);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let error_terms = match (noise, &svd.u) {
        (Some(xi), Some(u)) => order
            .iter()
            .map(|&i| {
                let s = svd.singular_values[i];
                let c = u.column(i).dot(xi).abs();
                if s > 0.0 { c / s } else { f64::INFINITY }
            })
            .collect(),
        _ => Vec::new(),
    };
    SvdReport { singular_values, error_terms }
}
