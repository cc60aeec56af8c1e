use plasmoshape::material::{contrast_lambda, drude_permittivity, resonance_frequencies, DrudeParams, EPS0};
use plasmoshape::C64;
use proptest::prelude::*;

#[test]
fn resonance_roots_hit_targets() {
    let p = DrudeParams::new(2e15, 1e13).unwrap();
    let targets = [0.2058, -0.2058, 0.1409, 0.0];
    let res = resonance_frequencies(&p, EPS0, &targets).unwrap();
    for r in &res {
        assert!(!r.roots.is_empty(), "mode {}", r.mode);
        for root in &r.roots {
            assert!((root.lambda.re - r.lambda_j).abs() < 1e-8, "{root:?}");
            assert!(root.omega > 0.0 && root.omega < p.omega_p);
            assert!(root.lambda.im < 0.0);
        }
    }
    // Outside (−1/2, 1/2) nothing resonates for a lossy Drude metal in vacuum.
    let none = resonance_frequencies(&p, EPS0, &[2.0]).unwrap();
    assert!(none[0].roots.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contrast_inverts(re in -50.0..50.0f64, im in -5.0..5.0f64, eps_m in 0.5..30.0f64) {
        prop_assume!((re - eps_m).abs() > 1e-3 || im.abs() > 1e-3);
        let eps_d = C64::new(re, im);
        let l = contrast_lambda(eps_d, eps_m).unwrap();
        // ε_D = ε_m (2λ + 1) / (2λ − 1)
        let back = eps_m * (2.0 * l + 1.0) / (2.0 * l - 1.0);
        prop_assert!((back - eps_d).norm() < 1e-8 * (1.0 + eps_d.norm()));
    }

    #[test]
    fn drude_is_causal(omega in 1e13..1e16f64, gamma in 0.0..1e14f64) {
        let p = DrudeParams::new(2e15, gamma).unwrap();
        let e = drude_permittivity(&p, omega).unwrap();
        prop_assert!(e.im >= 0.0);
        prop_assert!(e.re < EPS0);
    }
}
