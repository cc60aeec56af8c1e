//! Transmission problem solver and synthetic far-field measurements.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{discretize, DiscreteCurve, StarShape};
use crate::layer_potentials::{assemble_np_star, eval_exterior, BoundaryField, OperatorMatrix, MEAN_ZERO_TOL};
use crate::{Error, Point, Result, C64};

/// Default radius of the measurement circle.
pub const DEFAULT_RADIUS: f64 = 3.0;
/// Default number of measurement points.
pub const DEFAULT_COUNT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Re,
    Im,
}

/// `coeff · Re z^degree` or `coeff · Im z^degree` with `z = x1 + i x2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicTerm {
    pub part: Part,
    pub degree: u32,
    pub coeff: f64,
}

/// Harmonic polynomial incident field `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentField {
    pub terms: Vec<HarmonicTerm>,
}

impl Default for IncidentField {
    fn default() -> Self {
        Self::x1()
    }
}

impl IncidentField {
    pub fn new(terms: Vec<HarmonicTerm>) -> Self {
        Self { terms }
    }

    pub fn x1() -> Self {
        Self::new(vec![HarmonicTerm { part: Part::Re, degree: 1, coeff: 1.0 }])
    }

    pub fn x2() -> Self {
        Self::new(vec![HarmonicTerm { part: Part::Im, degree: 1, coeff: 1.0 }])
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![HarmonicTerm { part: Part::Re, degree: 0, coeff: c }])
    }

    /// `z^k`, `k z^{k−1}`, `k(k−1) z^{k−2}` for each term, reduced to
    /// `(value, ∇H, ∇²H)`.
    pub fn evaluate(&self, p: &Point) -> (f64, Point, Matrix2<f64>) {
        let z = C64::new(p.x, p.y);
        let mut value = 0.0;
        let mut grad = Point::zeros();
        let mut hess = Matrix2::zeros();
        for term in &self.terms {
            let k = term.degree as i32;
            let f = z.powi(k);
            let df = if k >= 1 { k as f64 * z.powi(k - 1) } else { C64::new(0.0, 0.0) };
            let ddf = if k >= 2 { (k * (k - 1)) as f64 * z.powi(k - 2) } else { C64::new(0.0, 0.0) };
            let c = term.coeff;
            match term.part {
                Part::Re => {
                    value += c * f.re;
                    grad += c * Point::new(df.re, -df.im);
                    hess += c * Matrix2::new(ddf.re, -ddf.im, -ddf.im, -ddf.re);
                }
                Part::Im => {
                    value += c * f.im;
                    grad += c * Point::new(df.im, df.re);
                    hess += c * Matrix2::new(ddf.im, ddf.re, ddf.re, -ddf.im);
                }
            }
        }
        (value, grad, hess)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.degree == 0 || t.coeff == 0.0)
    }
}

/// Node traces of `H` on the curve.
#[derive(Debug, Clone)]
pub struct IncidentTraces {
    pub dh_dnu: DVector<C64>,
    pub grad: Vec<Point>,
    pub hess: Vec<Matrix2<f64>>,
}

pub fn incident_traces(h: &IncidentField, curve: &DiscreteCurve) -> IncidentTraces {
    let n = curve.n();
    let mut grad = Vec::with_capacity(n);
    let mut hess = Vec::with_capacity(n);
    let mut dh_dnu = DVector::zeros(n);
    for i in 0..n {
        let (_, g, hh) = h.evaluate(&curve.x[i]);
        dh_dnu[i] = C64::new(g.dot(&curve.normal[i]), 0.0);
        grad.push(g);
        hess.push(hh);
    }
    IncidentTraces { dh_dnu, grad, hess }
}

/// Equispaced points on a centred circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct MeasurementGrid {
    pub radius: f64,
    pub count: usize,
    points: Vec<Point>,
}

impl Default for MeasurementGrid {
    fn default() -> Self {
        Self::new(DEFAULT_RADIUS, DEFAULT_COUNT).expect("default grid is valid")
    }
}

impl MeasurementGrid {
    pub fn new(radius: f64, count: usize) -> Result<Self> {
        if !(radius > 0.0) || count == 0 {
            return Err(Error::Config(format!(
                "measurement grid needs radius > 0 and at least one point (got {radius}, {count})"
            )));
        }
        let points = (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                radius * Point::new(t.cos(), t.sin())
            })
            .collect();
        Ok(Self { radius, count, points })
    }

    /// Arbitrary point set; `radius` records the smallest distance to the origin.
    pub fn from_points(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("empty measurement grid".into()));
        }
        let radius = points.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
        Ok(Self { radius, count: points.len(), points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn angles(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.y.atan2(p.x).rem_euclid(2.0 * PI)).collect()
    }

    pub fn check_shape(&self, shape: &StarShape) -> Result<()> {
        let r = shape.max_radius();
        if self.radius <= r {
            return Err(Error::Config(format!(
                "measurement radius {} does not enclose the shape (max radius {r})",
                self.radius
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    radius: f64,
    count: usize,
}

impl TryFrom<GridSpec> for MeasurementGrid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Self::new(spec.radius, spec.count)
    }
}

impl From<MeasurementGrid> for GridSpec {
    fn from(g: MeasurementGrid) -> Self {
        Self { radius: g.radius, count: g.count }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    Absolute,
    Relative,
}

/// Scattered field `u^s = S_D[φ]` at the measurement points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldData {
    pub values: Vec<C64>,
    pub radius: f64,
    pub count: usize,
    pub lambda: C64,
    pub noise_level: f64,
    pub noise_model: NoiseModel,
    pub seed: Option<u64>,
}

impl FarFieldData {
    /// `[Re u; Im u]`.
    pub fn stacked(&self) -> DVector<f64> {
        stack(&self.values)
    }
}

pub fn stack(values: &[C64]) -> DVector<f64> {
    let m = values.len();
    DVector::from_fn(2 * m, |i, _| if i < m { values[i].re } else { values[i - m].im })
}

/// Dense LU of `λI − K*`.
pub struct DensitySolver {
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    matrix: DMatrix<C64>,
    lambda: C64,
}

impl DensitySolver {
    pub fn new(np_star: &OperatorMatrix, lambda: C64) -> Result<Self> {
        let n = np_star.n();
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { lambda } else { C64::new(0.0, 0.0) };
            d - np_star.entries[(i, j)]
        });
        Self::from_matrix(matrix, lambda)
    }

    /// Factorizes an arbitrary system matrix (used for `λI − K`).
    pub fn from_matrix(matrix: DMatrix<C64>, lambda: C64) -> Result<Self> {
        let lu = matrix.clone().lu();
        let diag = lu.u().diagonal();
        let max = diag.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let min = diag.iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
        if !(min > 1e-14 * max) {
            return Err(Error::ResonanceSingularity(lambda));
        }
        Ok(Self { lu, matrix, lambda })
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    /// Solves with one step of iterative refinement.
    pub fn solve(&self, rhs: &DVector<C64>) -> Result<DVector<C64>> {
        let mut x = self
            .lu
            .solve(rhs)
            .ok_or(Error::ResonanceSingularity(self.lambda))?;
        let r = rhs - &self.matrix * &x;
        if let Some(dx) = self.lu.solve(&r) {
            x += dx;
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::ResonanceSingularity(self.lambda));
        }
        Ok(x)
    }

    pub fn solve_many(&self, rhs: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let mut x = self
            .lu
            .solve(rhs)
            .ok_or(Error::ResonanceSingularity(self.lambda))?;
        let r = rhs - &self.matrix * &x;
        if let Some(dx) = self.lu.solve(&r) {
            x += dx;
        }
        Ok(x)
    }

    /// `‖Ax − b‖ / ‖b‖`.
    pub fn relative_residual(&self, x: &DVector<C64>, rhs: &DVector<C64>) -> f64 {
        let b = rhs.norm();
        if b == 0.0 {
            return x.norm();
        }
        (&self.matrix * x - rhs).norm() / b
    }
}

/// Solves `(λI − K*_D)φ = ∂H/∂ν` on the curve.
pub fn solve_density(curve: &DiscreteCurve, lambda: C64, h: &IncidentField) -> Result<BoundaryField> {
    let np = assemble_np_star(curve);
    let solver = DensitySolver::new(&np, lambda)?;
    let rhs = incident_traces(h, curve).dh_dnu;
    let phi = solver.solve(&rhs)?;
    let mean_zero = crate::layer_potentials::relative_mean(curve, &phi) < MEAN_ZERO_TOL;
    Ok(BoundaryField { values: phi, mean_zero })
}

/// Scattered field of an already discretized curve.
pub fn scattered_field(
    curve: &DiscreteCurve,
    lambda: C64,
    h: &IncidentField,
    grid: &MeasurementGrid,
) -> Result<Vec<C64>> {
    let phi = solve_density(curve, lambda, h)?;
    eval_exterior(curve, &phi.values, grid.points())
}

/// `F(q) = u^s|_{∂Ω}` for a star-shaped inclusion.
pub fn forward_map(
    shape: &StarShape,
    n: usize,
    lambda: C64,
    h: &IncidentField,
    grid: &MeasurementGrid,
) -> Result<FarFieldData> {
    grid.check_shape(shape)?;
    let curve = discretize(shape, n)?;
    let values = scattered_field(&curve, lambda, h, grid)?;
    Ok(FarFieldData {
        values,
        radius: grid.radius,
        count: grid.count,
        lambda,
        noise_level: 0.0,
        noise_model: NoiseModel::Absolute,
        seed: None,
    })
}

/// Adds seeded Gaussian noise to the real and imaginary parts.
///
/// The absolute model draws `δξ`, the relative one `δ‖u‖_∞ ξ`.
pub fn add_noise(data: &FarFieldData, delta: f64, seed: u64, model: NoiseModel) -> Result<FarFieldData> {
    if !(delta >= 0.0) {
        return Err(Error::Config(format!("noise level must be non-negative, got {delta}")));
    }
    let scale = match model {
        NoiseModel::Absolute => delta,
        NoiseModel::Relative => delta * data.values.iter().map(|c| c.norm()).fold(0.0, f64::max),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = data
        .values
        .iter()
        .map(|&u| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if delta == 0.0 {
                u
            } else {
                u + scale * C64::new(re, im)
            }
        })
        .collect();
    Ok(FarFieldData {
        values,
        noise_level: delta,
        noise_model: model,
        seed: Some(seed),
        ..data.clone()
    })
}
