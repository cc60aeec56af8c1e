//! Node samples of a closed curve with the differential geometry the boundary
//! integral operators need.

use std::f64::consts::PI;

use super::fourier::SpectralDiff;
use super::shape::{ClosedCurve, StarShape};
use crate::{Error, Point, Result, C64};

/// Smallest admissible node count.
pub const MIN_NODES: usize = 16;

/// Equispaced sampling of a smooth closed curve.
///
/// `curvature` is the signed curvature `(x'y'' - y'x'') / |x'|³`, positive on
/// convex arcs of a counterclockwise curve (a circle of radius `R` has `1/R`).
#[derive(Debug, Clone)]
pub struct DiscreteCurve {
    pub t: Vec<f64>,
    pub x: Vec<Point>,
    pub dx: Vec<Point>,
    pub ddx: Vec<Point>,
    /// `|x'(t)|`.
    pub jacobian: Vec<f64>,
    pub tangent: Vec<Point>,
    /// Outward unit normal.
    pub normal: Vec<Point>,
    pub curvature: Vec<f64>,
    /// Trapezoidal weights `2π/n · |x'(t_i)|`.
    pub weights: Vec<f64>,
    diff: SpectralDiff,
}

fn check_nodes(n: usize) -> Result<()> {
    if n < MIN_NODES || !n.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "node count must be even and at least {MIN_NODES}, got {n}"
        )));
    }
    Ok(())
}

/// Equispaced parameters `2πi/n`.
pub fn parameters(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

impl DiscreteCurve {
    /// Samples an analytic curve at `n` equispaced parameters.
    pub fn from_curve<C: ClosedCurve + ?Sized>(curve: &C, n: usize) -> Result<Self> {
        check_nodes(n)?;
        let t = parameters(n);
        let mut x = Vec::with_capacity(n);
        let mut dx = Vec::with_capacity(n);
        let mut ddx = Vec::with_capacity(n);
        for &ti in &t {
            let [p, dp, ddp] = curve.sample(ti);
            x.push(p);
            dx.push(dp);
            ddx.push(ddp);
        }
        Self::from_samples(x, dx, ddx)
    }

    /// Builds a curve from node positions, differentiating spectrally in `t`.
    pub fn from_points(x: Vec<Point>) -> Result<Self> {
        let n = x.len();
        check_nodes(n)?;
        let diff = SpectralDiff::new(n);
        let xs: Vec<f64> = x.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = x.iter().map(|p| p.y).collect();
        let (dxs, ddxs) = (diff.derivative_real(&xs, 1), diff.derivative_real(&xs, 2));
        let (dys, ddys) = (diff.derivative_real(&ys, 1), diff.derivative_real(&ys, 2));
        let dx = dxs.iter().zip(&dys).map(|(&a, &b)| Point::new(a, b)).collect();
        let ddx = ddxs.iter().zip(&ddys).map(|(&a, &b)| Point::new(a, b)).collect();
        Self::from_samples(x, dx, ddx)
    }

    fn from_samples(x: Vec<Point>, dx: Vec<Point>, ddx: Vec<Point>) -> Result<Self> {
        let n = x.len();
        check_nodes(n)?;
        let h = 2.0 * PI / n as f64;
        let mut jacobian = Vec::with_capacity(n);
        let mut tangent = Vec::with_capacity(n);
        let mut normal = Vec::with_capacity(n);
        let mut curvature = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let d = dx[i];
            let speed = d.norm();
            if !(speed > 0.0) || !speed.is_finite() {
                return Err(Error::Config(format!("degenerate parametrization at node {i}")));
            }
            let tau = d / speed;
            jacobian.push(speed);
            tangent.push(tau);
            normal.push(Point::new(tau.y, -tau.x));
            curvature.push((d.x * ddx[i].y - d.y * ddx[i].x) / speed.powi(3));
            weights.push(h * speed);
        }
        let curve = Self {
            t: parameters(n),
            x,
            dx,
            ddx,
            jacobian,
            tangent,
            normal,
            curvature,
            weights,
            diff: SpectralDiff::new(n),
        };
        if curve.signed_area() <= 0.0 {
            return Err(Error::Config("curve must be oriented counterclockwise".into()));
        }
        Ok(curve)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn length(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `½ ∮ (x dy − y dx)` by the trapezoidal rule.
    pub fn signed_area(&self) -> f64 {
        let h = 2.0 * PI / self.n() as f64;
        0.5 * h
            * self
                .x
                .iter()
                .zip(&self.dx)
                .map(|(p, d)| p.x * d.y - p.y * d.x)
                .sum::<f64>()
    }

    pub fn spectral(&self) -> &SpectralDiff {
        &self.diff
    }

    /// Arclength derivative `d/ds` of node samples.
    pub fn tangential_derivative(&self, values: &[C64]) -> Vec<C64> {
        self.diff
            .derivative(values, 1)
            .into_iter()
            .zip(&self.jacobian)
            .map(|(d, &j)| d / j)
            .collect()
    }

    pub fn tangential_derivative_real(&self, values: &[f64]) -> Vec<f64> {
        self.diff
            .derivative_real(values, 1)
            .into_iter()
            .zip(&self.jacobian)
            .map(|(d, &j)| d / j)
            .collect()
    }

    /// `∮ f dσ` by the trapezoidal rule.
    pub fn integrate(&self, values: &[C64]) -> C64 {
        values.iter().zip(&self.weights).map(|(v, &w)| v * w).sum()
    }

    /// Largest distance between consecutive nodes.
    pub fn max_spacing(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| (self.x[(i + 1) % n] - self.x[i]).norm())
            .fold(0.0, f64::max)
    }

    /// Point-in-polygon test against the node polyline (even-odd rule).
    pub fn contains(&self, p: &Point) -> bool {
        let n = self.n();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.x[i], self.x[j]);
            if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    /// Whether any two non-adjacent segments of the node polyline intersect.
    pub fn self_intersects(&self) -> bool {
        let n = self.n();
        for i in 0..n {
            let (p1, p2) = (self.x[i], self.x[(i + 1) % n]);
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (q1, q2) = (self.x[j], self.x[(j + 1) % n]);
                if segments_intersect(p1, p2, q1, q2) {
                    return true;
                }
            }
        }
        false
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0)
}

/// Samples a star-shaped curve at `n` nodes with analytic derivatives.
pub fn discretize(shape: &StarShape, n: usize) -> Result<DiscreteCurve> {
    check_nodes(n)?;
    shape.check_star_shaped()?;
    DiscreteCurve::from_curve(shape, n)
}

/// Normal displacement field `h` (node values) scaled by `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalPerturbation {
    pub h: Vec<f64>,
    pub epsilon: f64,
}

impl NormalPerturbation {
    pub fn new(h: Vec<f64>, epsilon: f64) -> Result<Self> {
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite perturbation field".into()));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be non-negative, got {epsilon}")));
        }
        Ok(Self { h, epsilon })
    }

    /// Field `h(t)` sampled at the curve parameters.
    pub fn from_fn(curve: &DiscreteCurve, h: impl Fn(f64) -> f64, epsilon: f64) -> Result<Self> {
        Self::new(curve.t.iter().map(|&t| h(t)).collect(), epsilon)
    }
}

/// The curve `x + εhν`, re-differentiated spectrally in the original parameter.
pub fn perturb(curve: &DiscreteCurve, pert: &NormalPerturbation) -> Result<DiscreteCurve> {
    if pert.h.len() != curve.n() {
        return Err(Error::Config(format!(
            "perturbation has {} values for {} nodes",
            pert.h.len(),
            curve.n()
        )));
    }
    if pert.epsilon == 0.0 {
        return Ok(curve.clone());
    }
    let x: Vec<Point> = curve
        .x
        .iter()
        .zip(&curve.normal)
        .zip(&pert.h)
        .map(|((p, nu), h)| p + pert.epsilon * h * nu)
        .collect();
    let out = DiscreteCurve::from_points(x).map_err(|_| Error::PerturbationTooLarge)?;
    if out.self_intersects() {
        return Err(Error::PerturbationTooLarge);
    }
    Ok(out)
}
