//! First-order shape perturbation: the operator `K⁽¹⁾`, perturbed densities
//! and eigenpairs, the sensitivity kernel `P(x, y)`, its spectral expansion and
//! Jacobians of the forward map.
//!
//! All perturbations are `x ↦ x + εh(x)ν(x)` and fields on the perturbed curve
//! are pulled back to the original parameter. Curvature follows
//! [`DiscreteCurve::curvature`], so the line element changes as
//! `dσ_ε = (1 + εκh) dσ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::forward::{incident_traces, DensitySolver, IncidentField, IncidentTraces, MeasurementGrid};
use crate::geometry::{discretize, DiscreteCurve, StarShape, TrigShape};
use crate::layer_potentials::{green, green_normal_derivative, np_adjoint, LayerOperators};
use crate::spectrum::{spectral_distance, NpSpectrum};
use crate::{forward, par, Error, Point, Result, C64};

/// Default finite-difference step on shape coefficients.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Gap below which two eigenvalues are treated as one.
pub const DEGENERACY_GAP: f64 = 1e-6;

fn complex(v: &[f64]) -> DVector<C64> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)))
}

fn scale(h: &[f64], v: &DVector<C64>) -> DVector<C64> {
    DVector::from_iterator(v.len(), v.iter().zip(h).map(|(a, &b)| a * b))
}

/// `K⁽¹⁾[φ] = −∂_T(h ∂_T S[φ]) + ∂_ν D[hφ] − hκK*[φ] + K*[hκφ]`.
pub fn k1_apply(ops: &LayerOperators<'_>, h: &[f64], phi: &DVector<C64>) -> DVector<C64> {
    let curve = ops.curve;
    let hk: Vec<f64> = h.iter().zip(&curve.curvature).map(|(a, b)| a * b).collect();
    let ds_s = ops.d_ds(&ops.single.apply(phi));
    let first = -ops.d_ds(&scale(h, &ds_s));
    let second = ops.normal_derivative_double_layer(&scale(h, phi));
    let third = scale(&hk, &ops.np_star.apply(phi));
    let fourth = ops.np_star.apply(&scale(&hk, phi));
    first + second - third + fourth
}

/// `G⁽¹⁾ = h⟨∇²H ν, ν⟩ − (dh/ds)⟨∇H, T⟩`.
pub fn g1(curve: &DiscreteCurve, traces: &IncidentTraces, h: &[f64]) -> DVector<C64> {
    let dh = curve.tangential_derivative_real(h);
    DVector::from_fn(curve.n(), |i, _| {
        let nu = curve.normal[i];
        let hn = (traces.hess[i] * nu).dot(&nu);
        C64::new(h[i] * hn - dh[i] * traces.grad[i].dot(&curve.tangent[i]), 0.0)
    })
}

/// Density and its first-order shape derivative.
#[derive(Debug, Clone)]
pub struct FirstOrderDensity {
    pub phi: DVector<C64>,
    pub phi1: DVector<C64>,
    pub g1: DVector<C64>,
}

/// `φ⁽¹⁾ = (λI − K*)⁻¹(G⁽¹⁾ + K⁽¹⁾φ)`.
pub fn perturbed_density_first_order(
    ops: &LayerOperators<'_>,
    lambda: C64,
    incident: &IncidentField,
    h: &[f64],
) -> Result<FirstOrderDensity> {
    check_len(ops.curve, h)?;
    let solver = DensitySolver::new(&ops.np_star, lambda)?;
    let traces = incident_traces(incident, ops.curve);
    let phi = solver.solve(&traces.dh_dnu)?;
    let g1 = g1(ops.curve, &traces, h);
    let phi1 = solver.solve(&(&g1 + k1_apply(ops, h, &phi)))?;
    Ok(FirstOrderDensity { phi, phi1, g1 })
}

fn check_len(curve: &DiscreteCurve, h: &[f64]) -> Result<()> {
    if h.len() != curve.n() {
        return Err(Error::Config(format!(
            "perturbation has {} values for {} nodes",
            h.len(),
            curve.n()
        )));
    }
    Ok(())
}

/// Solves `(λI − K)φ_d(x, ·) = Γ(x, ·)` for every point; column `k` belongs to
/// `pts[k]`.
pub fn adjoint_density(ops: &LayerOperators<'_>, lambda: C64, pts: &[Point]) -> Result<DMatrix<C64>> {
    let curve = ops.curve;
    crate::layer_potentials::check_exterior(curve, pts)?;
    let k = np_adjoint(curve, &ops.np_star);
    let n = curve.n();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { lambda } else { C64::new(0.0, 0.0) };
        d - k.entries[(i, j)]
    });
    let solver = DensitySolver::from_matrix(matrix, lambda)?;
    let rhs = DMatrix::from_fn(n, pts.len(), |i, j| C64::new(green(&pts[j], &curve.x[i]), 0.0));
    solver.solve_many(&rhs)
}

/// `P(x_k, y_i)` for every measurement point and node.
#[derive(Debug, Clone)]
pub struct SensitivityKernel {
    /// `count × n`.
    pub p: DMatrix<C64>,
    pub weights: Vec<f64>,
    pub lambda: C64,
}

impl SensitivityKernel {
    /// `∮ h(y) P(x, y) dσ(y)` at every measurement point.
    pub fn pair(&self, h: &[f64]) -> Vec<C64> {
        let hw = DVector::from_iterator(h.len(), h.iter().zip(&self.weights).map(|(a, w)| C64::new(a * w, 0.0)));
        (&self.p * hw).iter().copied().collect()
    }
}

/// Assembles `P(x, y) = ∂_Tφ_d ∂_T(H + S[φ]) + (∂_ν D[φ_d] + ∂Γ/∂ν_y) φ`.
pub fn sensitivity_kernel(
    ops: &LayerOperators<'_>,
    lambda: C64,
    incident: &IncidentField,
    grid: &MeasurementGrid,
) -> Result<SensitivityKernel> {
    let curve = ops.curve;
    let n = curve.n();
    let solver = DensitySolver::new(&ops.np_star, lambda)?;
    let traces = incident_traces(incident, curve);
    let phi = solver.solve(&traces.dh_dnu)?;
    let ds_s = ops.d_ds(&ops.single.apply(&phi));
    let u_t = DVector::from_fn(n, |i, _| ds_s[i] + traces.grad[i].dot(&curve.tangent[i]));
    let phi_d = adjoint_density(ops, lambda, grid.points())?;
    let rows = par::map_indexed(grid.count, |k| {
        let col: DVector<C64> = phi_d.column(k).into_owned();
        let dt = ops.d_ds(&col);
        let dnd = ops.normal_derivative_double_layer(&col);
        let x = grid.points()[k];
        (0..n)
            .map(|i| {
                let dg = green_normal_derivative(&x, &curve.x[i], &curve.normal[i]);
                dt[i] * u_t[i] + (dnd[i] + dg) * phi[i]
            })
            .collect::<Vec<_>>()
    });
    let p = DMatrix::from_fn(grid.count, n, |k, i| rows[k][i]);
    Ok(SensitivityKernel { p, weights: curve.weights.clone(), lambda })
}

/// Shape derivative from the perturbed density,
/// `∮ h(∂Γ/∂ν_y φ + κΓφ) + Γ φ⁽¹⁾ dσ`.
pub fn ssf_from_density(
    ops: &LayerOperators<'_>,
    lambda: C64,
    incident: &IncidentField,
    grid: &MeasurementGrid,
    h: &[f64],
) -> Result<Vec<C64>> {
    let fo = perturbed_density_first_order(ops, lambda, incident, h)?;
    let curve = ops.curve;
    let mut out = boundary_variation(curve, grid.points(), h, &fo.phi);
    let s1 = crate::layer_potentials::eval_exterior(curve, &fo.phi1, grid.points())?;
    out.iter_mut().zip(s1).for_each(|(a, b)| *a += b);
    Ok(out)
}

/// `∮ h(∂Γ/∂ν_y + κΓ) φ dσ`, the change of `S_D[φ](x)` from moving the curve
/// with the density fixed.
fn boundary_variation(curve: &DiscreteCurve, pts: &[Point], h: &[f64], phi: &DVector<C64>) -> Vec<C64> {
    pts.iter()
        .map(|x| {
            (0..curve.n())
                .map(|i| {
                    let y = &curve.x[i];
                    let k = green_normal_derivative(x, y, &curve.normal[i]) + curve.curvature[i] * green(x, y);
                    phi[i] * (h[i] * k * curve.weights[i])
                })
                .sum()
        })
        .collect()
}

/// First-order eigenvalue and eigenfunction shifts.
#[derive(Debug, Clone)]
pub struct EigenPerturbation {
    pub lambda1: Vec<f64>,
    pub eigfun1: Vec<DVector<f64>>,
    /// `coupling[(j, l)] = ⟨K⁽¹⁾φ_j, φ_l⟩_{H*}`.
    pub coupling: DMatrix<f64>,
}

/// `λ_j⁽¹⁾ = ⟨K⁽¹⁾φ_j, φ_j⟩` and `φ_j⁽¹⁾ = Σ_{l≠j} ⟨K⁽¹⁾φ_j, φ_l⟩/(λ_j − λ_l) φ_l`.
///
/// Pairs closer than [`DEGENERACY_GAP`] are skipped when their coupling
/// vanishes and rejected otherwise.
pub fn eigen_perturbation(ops: &LayerOperators<'_>, spec: &NpSpectrum, h: &[f64]) -> Result<EigenPerturbation> {
    check_len(ops.curve, h)?;
    let j_count = spec.len();
    let k1: Vec<DVector<C64>> = par::map_indexed(j_count, |j| k1_apply(ops, h, &spec.eigfun_complex(j)));
    let funs: Vec<DVector<C64>> = (0..j_count).map(|j| spec.eigfun_complex(j)).collect();
    let coupling = DMatrix::from_fn(j_count, j_count, |j, l| ops.energy_form(&k1[j], &funs[l]).re);
    let scale = coupling.amax().max(f64::MIN_POSITIVE);
    let mut eigfun1 = Vec::with_capacity(j_count);
    for j in 0..j_count {
        let mut f = DVector::zeros(ops.curve.n());
        for l in 0..j_count {
            if l == j {
                continue;
            }
            let gap = spec.lambdas[j] - spec.lambdas[l];
            if gap.abs() < DEGENERACY_GAP {
                if coupling[(j, l)].abs() > 1e-8 * scale.max(1.0) {
                    return Err(Error::Degenerate(j, l));
                }
                continue;
            }
            f.axpy(coupling[(j, l)] / gap, &spec.eigfuns[l], 1.0);
        }
        eigfun1.push(f);
    }
    Ok(EigenPerturbation {
        lambda1: (0..j_count).map(|j| coupling[(j, j)]).collect(),
        eigfun1,
        coupling,
    })
}

/// How the derivative of the expansion coefficients `⟨∂H/∂ν, φ_j⟩` couples
/// the modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralCoupling {
    /// Uses `⟨∂H/∂ν, φ_j⁽¹⁾⟩` with the eigenfunction shifts above.
    AsStated,
    /// Uses the transposed coupling `⟨K⁽¹⁾φ_l, φ_j⟩` and adds the component of
    /// `φ⁽¹⁾` along the equilibrium density; agrees with the direct kernel up to
    /// truncation.
    #[default]
    Adjoint,
}

/// Truncated spectral expansion of the shape sensitivity.
#[derive(Debug, Clone)]
pub struct SpectralSsf {
    pub values: Vec<C64>,
    /// `‖f − Σ c_jφ_j‖_{H*} / ‖f‖_{H*}` for `f = ∂H/∂ν`.
    pub tail: f64,
    /// `dist(λ, σ)²`, the scale below which `ε` has to stay for the expansion
    /// to be meaningful.
    pub dist_sq: f64,
    pub modes: usize,
}

/// Equilibrium density `χ` with `K*χ = χ/2` and `∮χ dσ = 1`.
fn equilibrium_density(ops: &LayerOperators<'_>) -> Result<DVector<f64>> {
    let w = &ops.curve.weights;
    let n = w.len();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 0.5 } else { 0.0 };
        d - ops.np_star.entries[(i, j)] + w[j]
    });
    a.lu()
        .solve(&DVector::from_element(n, 1.0))
        .ok_or_else(|| Error::DiscretizationTooCoarse("equilibrium density system is singular".into()))
}

/// Spectral expansion of `SSF(h)(x)` over the retained modes of `spec`.
#[allow(clippy::too_many_arguments)]
pub fn spectral_ssf(
    ops: &LayerOperators<'_>,
    spec: &NpSpectrum,
    lambda: C64,
    incident: &IncidentField,
    grid: &MeasurementGrid,
    h: &[f64],
    coupling: SpectralCoupling,
) -> Result<SpectralSsf> {
    check_len(ops.curve, h)?;
    if spec.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let curve = ops.curve;
    let pts = grid.points();
    crate::layer_potentials::check_exterior(curve, pts)?;
    let jn = spec.len();
    let traces = incident_traces(incident, curve);
    let f = &traces.dh_dnu;
    let funs: Vec<DVector<C64>> = (0..jn).map(|j| spec.eigfun_complex(j)).collect();
    let lam: Vec<C64> = spec.lambdas.iter().map(|&l| C64::new(l, 0.0)).collect();
    for l in &lam {
        if (lambda - l).norm() == 0.0 {
            return Err(Error::ResonanceSingularity(lambda));
        }
    }
    let c: Vec<C64> = funs.iter().map(|p| ops.energy_form(f, p)).collect();
    let g1v = g1(curve, &traces, h);
    let g: Vec<C64> = funs.iter().map(|p| ops.energy_form(&g1v, p)).collect();
    let pert = eigen_perturbation(ops, spec, h)?;
    let b = &pert.coupling;

    let s_modes: Vec<Vec<C64>> = funs
        .iter()
        .map(|p| crate::layer_potentials::eval_exterior(curve, p, pts))
        .collect::<Result<_>>()?;
    let boundary: Vec<Vec<C64>> = funs.iter().map(|p| boundary_variation(curve, pts, h, p)).collect();
    let s_pert: Vec<Vec<C64>> = pert
        .eigfun1
        .iter()
        .map(|p| crate::layer_potentials::eval_exterior(curve, &complex(p.as_slice()), pts))
        .collect::<Result<_>>()?;

    let mut values = vec![C64::new(0.0, 0.0); pts.len()];
    for j in 0..jn {
        let r = 1.0 / (lambda - lam[j]);
        let mut dc = g[j];
        for l in 0..jn {
            let gap = spec.lambdas[j] - spec.lambdas[l];
            if l == j || gap.abs() < DEGENERACY_GAP {
                continue;
            }
            let blj = match coupling {
                SpectralCoupling::AsStated => b[(j, l)],
                SpectralCoupling::Adjoint => b[(l, j)],
            };
            dc += c[l] * (blj / gap);
        }
        let first = dc * r;
        let second = c[j] * pert.lambda1[j] * r * r;
        for k in 0..pts.len() {
            let z = s_pert[j][k] + boundary[j][k];
            values[k] += (first + second) * s_modes[j][k] + c[j] * r * z;
        }
    }

    if coupling == SpectralCoupling::Adjoint {
        let chi = equilibrium_density(ops)?;
        let phi: DVector<C64> = (0..jn).fold(DVector::zeros(curve.n()), |acc, j| acc + &funs[j] * (c[j] / (lambda - lam[j])));
        let rhs = &g1v + k1_apply(ops, h, &phi);
        let mass = curve.integrate(rhs.as_slice());
        let chi_c = complex(chi.as_slice());
        let s_chi = crate::layer_potentials::eval_exterior(curve, &chi_c, pts)?;
        let coef = mass / (lambda - 0.5);
        for (v, s) in values.iter_mut().zip(s_chi) {
            *v += coef * s;
        }
    }

    let f_norm2 = ops.energy_form(f, f).re;
    let captured: f64 = c.iter().map(|v| v.norm_sqr()).sum();
    let tail = if f_norm2 > 0.0 { ((f_norm2 - captured).max(0.0) / f_norm2).sqrt() } else { 0.0 };
    let dist = spectral_distance(lambda, spec, true)?;
    Ok(SpectralSsf { values, tail, dist_sq: dist * dist, modes: jn })
}

/// How columns of the Jacobian are computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum JacobianMethod {
    /// Central differences with step `eta` on each coefficient.
    FiniteDifference { eta: f64 },
    /// Pairing of the sensitivity kernel with each coefficient direction.
    Ssf,
}

impl Default for JacobianMethod {
    fn default() -> Self {
        Self::FiniteDifference { eta: DEFAULT_FD_STEP }
    }
}

/// Normal component `(∂x/∂q_k)·ν` of every coefficient direction.
pub fn coefficient_directions(shape: &TrigShape, curve: &DiscreteCurve) -> Vec<Vec<f64>> {
    let m = shape.m();
    let radial: Vec<f64> = (0..curve.n())
        .map(|i| {
            let t = curve.t[i];
            Point::new(t.cos(), t.sin()).dot(&curve.normal[i])
        })
        .collect();
    let mut dirs = vec![vec![0.0; curve.n()]; 2 * m + 1];
    for i in 0..curve.n() {
        let g = TrigShape::basis(m, curve.t[i]);
        for (k, gk) in g.into_iter().enumerate() {
            dirs[k][i] = gk * radial[i];
        }
    }
    dirs
}

/// Jacobian of `q ↦ F(q)`, `count × (2m+1)`.
pub fn jacobian(
    shape: &TrigShape,
    n: usize,
    lambda: C64,
    incident: &IncidentField,
    grid: &MeasurementGrid,
    method: JacobianMethod,
) -> Result<DMatrix<C64>> {
    let q = shape.coeffs();
    let cols: Vec<Vec<C64>> = match method {
        JacobianMethod::FiniteDifference { eta } => {
            let cols = par::map_indexed(q.len(), |k| -> Result<Vec<C64>> {
                let eval = |s: f64| -> Result<Vec<C64>> {
                    let mut qk = q.clone();
                    qk[k] += s * eta;
                    let shape = StarShape::Trig(TrigShape::from_coeffs(&qk)?);
                    let curve = discretize(&shape, n)?;
                    forward::scattered_field(&curve, lambda, incident, grid)
                };
                let plus = eval(1.0)?;
                let minus = eval(-1.0)?;
                Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * eta)).collect())
            });
            cols.into_iter().collect::<Result<_>>()?
        }
        JacobianMethod::Ssf => {
            let curve = discretize(&StarShape::Trig(shape.clone()), n)?;
            let ops = LayerOperators::new(&curve);
            let kernel = sensitivity_kernel(&ops, lambda, incident, grid)?;
            coefficient_directions(shape, &curve).iter().map(|h| kernel.pair(h)).collect()
        }
    };
    Ok(DMatrix::from_fn(grid.count, q.len(), |i, k| cols[k][i]))
}
