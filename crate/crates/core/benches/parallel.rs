use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use plasmoshape::experiment::{run_experiment, ExperimentOptions, ExperimentPreset};
use plasmoshape::forward::{IncidentField, MeasurementGrid};
use plasmoshape::geometry::TrigShape;
use plasmoshape::inversion::la_sample;
use plasmoshape::sensitivity::{jacobian, JacobianMethod};
use plasmoshape::C64;
use nalgebra::DMatrix;
use std::hint::black_box;

fn pear(m: usize) -> TrigShape {
    let mut a = vec![0.0; m + 1];
    a[0] = 0.72;
    a[3] = 0.15;
    TrigShape::new(a, vec![0.0; m]).unwrap()
}

/// Runs `f` on a pool of `threads` workers; `None` keeps the global pool.
#[cfg(feature = "parallel")]
fn on_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f),
    }
}

#[cfg(not(feature = "parallel"))]
fn on_pool<R: Send>(_threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

fn variants() -> Vec<(&'static str, Option<usize>)> {
    if cfg!(feature = "parallel") {
        vec![("rayon", None), ("sequential", Some(1))]
    } else {
        vec![("sequential", None)]
    }
}

fn bench_jacobian(c: &mut Criterion) {
    let shape = pear(8);
    let grid = MeasurementGrid::default();
    let lambda = C64::new(0.25, -1e-6);
    let mut group = c.benchmark_group("fd_jacobian_m8_n64");
    for (name, threads) in variants() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                on_pool(threads, || {
                    jacobian(&shape, 64, lambda, &IncidentField::x1(), &grid, JacobianMethod::default()).unwrap()
                })
            })
        });
    }
    group.finish();
}

fn bench_laplace(c: &mut Criterion) {
    let q = pear(8);
    let p = 17;
    let cov = DMatrix::from_fn(p, p, |i, j| if i == j { 1e-4 } else { 1e-6 / (1.0 + (i as f64 - j as f64).abs()) });
    let mut group = c.benchmark_group("laplace_10k_samples");
    for (name, threads) in variants() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| on_pool(threads, || la_sample(black_box(&q), &cov, 10_000, 7).unwrap()))
        });
    }
    group.finish();
}

fn bench_experiment(c: &mut Criterion) {
    let preset = ExperimentPreset::by_name("example4").unwrap();
    let opts = ExperimentOptions { m: 3, samples: 200, max_iter: 5, ..Default::default() };
    let mut group = c.benchmark_group("experiment_example4_2seeds");
    group.sample_size(10);
    for (name, threads) in variants() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| on_pool(threads, || run_experiment(&preset, &[0, 1], &opts).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_jacobian, bench_laplace, bench_experiment);
criterion_main!(benches);
