mod common;

use common::sample;
use nalgebra::{DMatrix, DVector};
use plasmoshape::geometry::{discretize, DiscreteCurve, Ellipse, StarShape};
use plasmoshape::layer_potentials::{eval_exterior, LayerOperators};
use plasmoshape::C64;
use proptest::prelude::*;

fn calderon_residual(curve: &DiscreteCurve) -> f64 {
    let ops = LayerOperators::new(curve);
    let s = &ops.single.entries;
    let lhs: DMatrix<f64> = s * &ops.np_star.entries;
    let rhs: DMatrix<f64> = &ops.np().entries * s;
    (&lhs - &rhs).norm() / lhs.norm()
}

#[test]
fn calderon_on_presets_converges() {
    for name in ["bean", "peanut", "pear"] {
        let shape = StarShape::preset(name).unwrap();
        let res: Vec<f64> = [40, 80, 160]
            .iter()
            .map(|&n| calderon_residual(&discretize(&shape, n).unwrap()))
            .collect();
        assert!(res[2] < res[0], "{name}: {res:?}");
        assert!(res[2] < 1e-6, "{name}: {res:?}");
    }
}

#[test]
fn calderon_on_ellipse() {
    let c = DiscreteCurve::from_curve(&Ellipse { a: 1.0, b: 0.5 }, 96).unwrap();
    assert!(calderon_residual(&c) < 1e-10);
}

// S[φ] is continuous across the curve while ∂_ν S[φ] jumps by φ.
#[test]
fn single_layer_jump() {
    let c = discretize(&StarShape::Peanut, 2048).unwrap();
    let ops = LayerOperators::new(&c);
    let phi = DVector::from_vec(sample(&c, |t| (2.0 * t).cos() + 0.3 * t.sin())).map(|v| C64::new(v, 0.0));
    let on = ops.single.apply(&phi);
    let kphi = ops.np_star.apply(&phi);
    for i in [100, 700, 1500] {
        let (x, nu) = (c.x[i], c.normal[i]);
        let h = 0.02;
        let u = |d: f64| eval_exterior(&c, &phi, &[x + d * nu]).unwrap()[0];
        let (u1, u2) = (u(h), u(2.0 * h));
        // Quadratic extrapolation to the curve from outside.
        let trace = 3.0 * u1 - 3.0 * u2 + u(3.0 * h);
        assert!((trace - on[i]).norm() < 1e-3, "{trace} vs {}", on[i]);
        let d_out = (-3.0 * on[i] + 4.0 * u1 - u2) / (2.0 * h);
        let expected = 0.5 * phi[i] + kphi[i];
        assert!((d_out - expected).norm() < 2e-2 * expected.norm().max(1.0), "{d_out} vs {expected}");
        let inner = -0.5 * phi[i] + kphi[i];
        assert!((d_out - inner).norm() > 0.5 * phi[i].norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operators_are_linear(c1 in -2.0..2.0f64, c2 in -2.0..2.0f64, k in 1usize..6) {
        let c = discretize(&StarShape::Bean, 64).unwrap();
        let ops = LayerOperators::new(&c);
        let f = DVector::from_vec(sample(&c, |t| (k as f64 * t).cos())).map(|v| C64::new(v, 0.0));
        let g = DVector::from_vec(sample(&c, |t| (t + 0.3).sin().powi(3))).map(|v| C64::new(0.0, v));
        let comb = &f * C64::new(c1, 0.0) + &g * C64::new(c2, 0.0);
        for op in [&ops.single, &ops.np_star] {
            let lhs = op.apply(&comb);
            let rhs = op.apply(&f) * C64::new(c1, 0.0) + op.apply(&g) * C64::new(c2, 0.0);
            prop_assert!((lhs - rhs).camax() < 1e-12);
        }
    }

    #[test]
    fn np_star_preserves_mean_zero(k in 1usize..8, phase in 0.0..6.3f64) {
        let c = discretize(&StarShape::Peanut, 128).unwrap();
        let ops = LayerOperators::new(&c);
        let f = DVector::from_vec(sample(&c, |t| (k as f64 * t + phase).cos()));
        let f = plasmoshape::layer_potentials::BoundaryField::project_mean_zero(&c, f.map(|v| C64::new(v, 0.0)));
        let kf = ops.np_star.apply(&f.values);
        prop_assert!(plasmoshape::layer_potentials::relative_mean(&c, &kf) < 1e-10);
    }
}
