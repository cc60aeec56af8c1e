use plasmoshape::geometry::{discretize, DiscreteCurve, Ellipse, StarShape};
use plasmoshape::layer_potentials::LayerOperators;
use plasmoshape::spectrum::{np_spectrum, spectral_distance};
use plasmoshape::C64;

fn eigenvalues(shape: &StarShape, n: usize, modes: usize) -> Vec<f64> {
    let c = discretize(shape, n).unwrap();
    np_spectrum(&LayerOperators::new(&c), modes).unwrap().lambdas
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn presets_converge_under_refinement() {
    for (name, n) in [("peanut", 128), ("pear", 128), ("bean", 512)] {
        let shape = StarShape::preset(name).unwrap();
        let coarse = sorted(eigenvalues(&shape, n, 10));
        let fine = sorted(eigenvalues(&shape, 2 * n, 10));
        for j in 0..10 {
            assert!((coarse[j] - fine[j]).abs() < 1e-6, "{name} mode {j}: {} vs {}", coarse[j], fine[j]);
        }
    }
}

// Nonzero eigenvalues of the 2D operator come in ± pairs.
#[test]
fn spectrum_is_symmetric() {
    for name in ["peanut", "pear"] {
        let c = discretize(&StarShape::preset(name).unwrap(), 192).unwrap();
        let spec = np_spectrum(&LayerOperators::new(&c), 8).unwrap();
        for l in &spec.lambdas {
            let mirror = spec.all_lambdas.iter().map(|m| (m + l).abs()).fold(f64::INFINITY, f64::min);
            assert!(mirror < 1e-8, "{name}: {l}");
        }
    }
}

#[test]
fn eigenvalues_inside_half_open_interval() {
    for name in StarShape::PRESETS {
        let n = if name == "bean" { 256 } else { 96 };
        let c = discretize(&StarShape::preset(name).unwrap(), n).unwrap();
        let spec = np_spectrum(&LayerOperators::new(&c), 12).unwrap();
        assert!(spec.lambdas.iter().all(|l| l.abs() < 0.5), "{name}: {:?}", spec.lambdas);
        assert!(spec.all_lambdas.len() == c.n() - 1);
    }
}

#[test]
fn eigenfunctions_are_hstar_orthonormal() {
    let c = discretize(&StarShape::Peanut, 128).unwrap();
    let ops = LayerOperators::new(&c);
    let spec = np_spectrum(&ops, 8).unwrap();
    for i in 0..spec.len() {
        for j in 0..spec.len() {
            let g = ops.energy_form(&spec.eigfun_complex(i), &spec.eigfun_complex(j)).re;
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((g - target).abs() < 1e-8, "({i},{j}) {g}");
        }
        let kphi = ops.np_star.apply(&spec.eigfun_complex(i));
        let resid = (kphi - spec.eigfun_complex(i) * C64::new(spec.lambdas[i], 0.0)).camax();
        assert!(resid < 1e-6 * spec.eigfuns[i].amax(), "mode {i}: {resid}");
    }
}

#[test]
fn peanut_leading_pair_and_distance() {
    let l = eigenvalues(&StarShape::Peanut, 256, 4);
    assert!((l[0].abs() - 0.2058).abs() < 5e-4, "{l:?}");
    let c = discretize(&StarShape::Peanut, 256).unwrap();
    let spec = np_spectrum(&LayerOperators::new(&c), 12).unwrap();
    let d = spectral_distance(C64::new(0.25, -1e-6), &spec, false).unwrap();
    assert!((d - (0.25 - l[0].abs())).abs() < 1e-6);
}

#[test]
fn ellipse_higher_pairs() {
    let c = DiscreteCurve::from_curve(&Ellipse { a: 1.0, b: 0.5 }, 256).unwrap();
    let l = np_spectrum(&LayerOperators::new(&c), 10).unwrap().lambdas;
    for k in 1..=5 {
        let target = 0.5 * (1.0f64 / 3.0).powi(k);
        let pair = sorted(l[2 * (k as usize - 1)..2 * k as usize].to_vec());
        assert!((pair[0] + target).abs() < 1e-6 && (pair[1] - target).abs() < 1e-6, "{pair:?}");
    }
}
