mod common;

use nalgebra::DMatrix;
use plasmoshape::forward::{add_noise, forward_map, IncidentField, MeasurementGrid, NoiseModel};
use plasmoshape::geometry::{StarShape, TrigShape};
use plasmoshape::inversion::{
    la_sample, laplace_covariance, lm_reconstruct, relative_error, stack_matrix, svd_report, InversionConfig, Penalty,
};
use plasmoshape::sensitivity::{jacobian, JacobianMethod};
use plasmoshape::C64;
use proptest::prelude::*;

fn pear_run(lambda: C64, delta: f64, mu: f64, seed: u64, samples: usize) -> plasmoshape::inversion::ReconstructionRun {
    let truth = StarShape::preset("pear").unwrap();
    let grid = MeasurementGrid::default();
    let clean = forward_map(&truth, 80, lambda, &IncidentField::x1(), &grid).unwrap();
    let data = add_noise(&clean, delta, seed, NoiseModel::Absolute).unwrap();
    let cfg = InversionConfig { mu, delta, m: 4, samples, seed, ..Default::default() };
    lm_reconstruct(&data, &TrigShape::circle(0.73, 4).unwrap(), &cfg, Some(&truth)).unwrap()
}

#[test]
fn recovers_pear_away_from_resonance() {
    let run = pear_run(C64::new(-0.6, 0.0), 1e-4, 1e-4, 1, 0);
    let e = &run.e_gamma_history;
    assert!(e.last().unwrap() < &e[0], "{e:?}");
    assert!(*e.last().unwrap() < 0.02, "{e:?}");
    assert!(run.singular_values.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(run.singular_values.len(), 9);
}

#[test]
fn laplace_mean_within_sampling_error() {
    let samples = 10_000;
    let run = pear_run(C64::new(2.0, 0.0), 0.01, 0.05, 4, samples);
    let post = run.posterior.expect("posterior");
    let c = DMatrix::from_fn(post.c_map.len(), post.c_map.len(), |i, j| post.c_map[i][j]);
    let bound = 3.0 * (c.trace() / samples as f64).sqrt();
    assert!(post.mean_offset < bound, "{} vs {bound}", post.mean_offset);
    let b = &post.bands;
    for i in 0..b.t.len() {
        assert!(b.lower[i] <= b.q_map[i] && b.q_map[i] <= b.upper[i]);
    }
    assert!(b.mean_width() > 0.0);
}

#[test]
fn runs_are_reproducible() {
    let a = pear_run(C64::new(0.25, -1e-6), 0.01, 0.05, 9, 200);
    let b = pear_run(C64::new(0.25, -1e-6), 0.01, 0.05, 9, 200);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn resonant_jacobian_dominates() {
    let shape = common::trig_fit(&StarShape::Peanut, 8);
    let grid = MeasurementGrid::default();
    let svals = |lambda: C64| {
        let g = jacobian(&shape, 64, lambda, &IncidentField::x1(), &grid, JacobianMethod::Ssf).unwrap();
        svd_report(&stack_matrix(&g), None).singular_values
    };
    let near = svals(C64::new(0.2, -1e-6));
    let far = svals(C64::new(2.0, 0.0));
    assert!(near.iter().zip(&far).all(|(a, b)| a > b), "{near:?}\n{far:?}");
}

#[test]
fn covariance_shrinks_with_information() {
    let g = DMatrix::from_fn(12, 3, |i, j| ((i + 1) as f64 * (j + 2) as f64).sin());
    let w = Penalty::Identity.weights(3);
    let c1 = laplace_covariance(&g, 0.1, 0.01, &w).unwrap();
    let c2 = laplace_covariance(&(&g * 10.0), 0.1, 0.01, &w).unwrap();
    assert!(c2.trace() < c1.trace());
    let q = TrigShape::circle(0.7, 1).unwrap();
    let la = la_sample(&q, &c1, 500, 3).unwrap();
    assert_eq!(la.samples.len(), 500);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn relative_error_of_scaled_shape(r in 0.1..2.0f64, s in 0.2..3.0f64) {
        let base = StarShape::Trig(TrigShape::new(vec![r, 0.1 * r], vec![0.05 * r]).unwrap());
        let scaled = StarShape::Trig(TrigShape::new(vec![s * r, 0.1 * s * r], vec![0.05 * s * r]).unwrap());
        prop_assert!(relative_error(&base, &base).unwrap() == 0.0);
        prop_assert!((relative_error(&scaled, &base).unwrap() - (s - 1.0).abs()).abs() < 1e-12);
    }

    #[test]
    fn stacked_matrix_preserves_norm(vals in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 6)) {
        let g = DMatrix::from_fn(3, 2, |i, j| { let (a, b) = vals[2 * i + j]; C64::new(a, b) });
        let s = stack_matrix(&g);
        prop_assert_eq!(s.shape(), (6, 2));
        let fro: f64 = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((s.norm() - fro).abs() < 1e-12);
    }
}
