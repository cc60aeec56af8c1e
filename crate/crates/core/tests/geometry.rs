use plasmoshape::geometry::{discretize, eval_shape, parameters, perturb, NormalPerturbation, SpectralDiff, StarShape, TrigShape};
use plasmoshape::C64;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn presets_discretize() {
    for name in StarShape::PRESETS {
        let shape = StarShape::preset(name).unwrap();
        shape.check_star_shaped().unwrap();
        let c = discretize(&shape, 128).unwrap();
        assert!(c.signed_area() > 0.0);
        assert!(!c.self_intersects());
        let (r, p) = eval_shape(&shape, 1.0).unwrap();
        assert!((p.norm() - r).abs() < 1e-14);
    }
    let disk = discretize(&StarShape::preset("disk05").unwrap(), 64).unwrap();
    assert!((disk.length() - PI).abs() < 1e-12);
    assert!((disk.signed_area() - PI / 4.0).abs() < 1e-12);
}

#[test]
fn dilation_of_disk() {
    let c = discretize(&StarShape::preset("disk05").unwrap(), 64).unwrap();
    let p = perturb(&c, &NormalPerturbation::new(vec![1.0; 64], 0.1).unwrap()).unwrap();
    assert!(p.x.iter().all(|x| (x.norm() - 0.6).abs() < 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spectral_derivative_is_exact_on_trig_polys(k in 1usize..15, phase in 0.0..6.3f64, nexp in 5u32..8) {
        let n = 1usize << nexp;
        let d = SpectralDiff::new(n);
        let t = parameters(n);
        let f: Vec<C64> = t.iter().map(|&t| C64::new((k as f64 * t + phase).sin(), 0.0)).collect();
        let df = d.derivative(&f, 1);
        let ddf = d.derivative(&f, 2);
        for i in 0..n {
            let kk = k as f64;
            prop_assert!((df[i].re - kk * (kk * t[i] + phase).cos()).abs() < 1e-9 * kk);
            prop_assert!((ddf[i].re + kk * kk * (kk * t[i] + phase).sin()).abs() < 1e-9 * kk * kk);
        }
    }

    #[test]
    fn trig_shape_is_periodic(a0 in 0.5..1.0f64, a1 in -0.2..0.2f64, b2 in -0.2..0.2f64, t in 0.0..6.3f64) {
        let s = TrigShape::new(vec![a0, a1, 0.0], vec![0.0, b2]).unwrap();
        let [r0, d0, dd0] = s.radial(t);
        let [r1, d1, dd1] = s.radial(t + 2.0 * PI);
        prop_assert!((r0 - r1).abs() < 1e-12 && (d0 - d1).abs() < 1e-12 && (dd0 - dd1).abs() < 1e-11);
        prop_assert!((s.radius(t) - r0).abs() < 1e-12);
        let back = TrigShape::from_coeffs(&s.coeffs()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn small_perturbations_keep_curves_simple(eps in 0.0..0.05f64, k in 1u32..6) {
        let c = discretize(&StarShape::Peanut, 128).unwrap();
        let h: Vec<f64> = c.t.iter().map(|&t| (k as f64 * t).cos()).collect();
        let p = perturb(&c, &NormalPerturbation::new(h, eps).unwrap()).unwrap();
        prop_assert!(!p.self_intersects());
        prop_assert!((p.length() - c.length()).abs() <= 2.0 * PI * eps * (k as f64 + 2.0));
    }
}
