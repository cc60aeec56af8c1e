//! Preset reconstruction experiments and their CSV/JSON outputs.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::forward::{add_noise, forward_map, IncidentField, MeasurementGrid, NoiseModel};
use crate::geometry::{StarShape, TrigShape};
use crate::inversion::{
    lm_reconstruct, relative_error, InversionConfig, MuChoice, Penalty, ReconstructionRun, DEFAULT_MODES,
    DEFAULT_N_FORWARD, DEFAULT_N_INVERSE,
};
use crate::sensitivity::JacobianMethod;
use crate::{par, Error, Result, C64};

/// Default number of noise seeds per configuration.
pub const DEFAULT_SEEDS: usize = 16;

/// Regularization used for a noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuRule {
    pub delta: f64,
    pub mu: MuChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPreset {
    pub name: String,
    pub shape: StarShape,
    pub init_radius: f64,
    pub incident: IncidentField,
    /// Background permittivity quoted with the example, if any.
    pub eps_m: Option<f64>,
    /// Ordered from closest to farthest from the spectrum.
    pub lambdas: Vec<C64>,
    pub mu_rules: Vec<MuRule>,
    pub grid: MeasurementGrid,
}

impl ExperimentPreset {
    pub fn names() -> &'static [&'static str] {
        &["example1", "example2", "example3", "example4", "example4-random-mu"]
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let fixed = |mu: f64| vec![MuRule { delta: 0.01, mu: MuChoice::Fixed(mu) }, MuRule { delta: 0.05, mu: MuChoice::Fixed(mu) }];
        let weak = |re: f64| C64::new(re, -1e-6);
        let (shape, init, eps_m, lambdas, mu_rules) = match name {
            "example1" => (
                StarShape::preset("disk05")?,
                0.6,
                Some(24.8),
                vec![C64::new(0.0, -8e-3), C64::new(0.244, -6.3e-3), C64::new(-0.98, 0.0)],
                vec![
                    MuRule { delta: 0.01, mu: MuChoice::Fixed(0.01) },
                    MuRule { delta: 0.05, mu: MuChoice::Fixed(0.05) },
                ],
            ),
            "example2" => (StarShape::Bean, 0.72, None, vec![weak(0.16), weak(0.25), C64::new(2.0, 0.0)], fixed(0.1)),
            "example3" => (StarShape::Peanut, 0.78, None, vec![weak(0.19), weak(0.25), C64::new(2.0, 0.0)], fixed(0.05)),
            "example4" => (StarShape::preset("pear")?, 0.73, None, vec![weak(0.14), weak(0.25), C64::new(2.0, 0.0)], fixed(0.5)),
            "example4-random-mu" => (
                StarShape::preset("pear")?,
                0.73,
                None,
                vec![weak(0.14), weak(0.25), C64::new(2.0, 0.0)],
                vec![MuRule { delta: 0.01, mu: MuChoice::Uniform }, MuRule { delta: 0.05, mu: MuChoice::Uniform }],
            ),
            other => {
                return Err(Error::Config(format!(
                    "unknown preset {other:?}; expected one of {:?}",
                    Self::names()
                )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            shape,
            init_radius: init,
            incident: IncidentField::x1(),
            eps_m,
            lambdas,
            mu_rules,
            grid: MeasurementGrid::default(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub m: usize,
    pub n_forward: usize,
    pub n_inverse: usize,
    pub max_iter: usize,
    pub eps_stop: f64,
    pub samples: usize,
    pub jacobian: JacobianMethod,
    pub penalty: Penalty,
    pub noise_model: NoiseModel,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            m: DEFAULT_MODES,
            n_forward: DEFAULT_N_FORWARD,
            n_inverse: DEFAULT_N_INVERSE,
            max_iter: 100,
            eps_stop: 1e-5,
            samples: 10_000,
            jacobian: JacobianMethod::default(),
            penalty: Penalty::Identity,
            noise_model: NoiseModel::Absolute,
        }
    }
}

/// One `(λ, δ, seed)` reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub lambda: C64,
    pub delta: f64,
    pub mu: f64,
    pub seed: u64,
    pub e_gamma: Option<f64>,
    pub e_gamma_bar: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub run: Option<ReconstructionRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub lambda: C64,
    pub delta: f64,
    pub runs: usize,
    pub failures: usize,
    pub mean_e_gamma: f64,
    pub std_e_gamma: f64,
    pub mean_e_gamma_bar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub preset: ExperimentPreset,
    pub options: ExperimentOptions,
    pub seeds: Vec<u64>,
    pub summary: Vec<SummaryRow>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

impl ExperimentResult {
    pub fn summary_for(&self, lambda: C64, delta: f64) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.lambda == lambda && r.delta == delta)
    }
}

fn single_run(preset: &ExperimentPreset, opts: &ExperimentOptions, lambda: C64, rule: MuRule, seed: u64) -> RunRecord {
    let mu = rule.mu.resolve(seed);
    let attempt = || -> Result<ReconstructionRun> {
        let clean = forward_map(&preset.shape, opts.n_forward, lambda, &preset.incident, &preset.grid)?;
        let data = add_noise(&clean, rule.delta, seed, opts.noise_model)?;
        let cfg = InversionConfig {
            mu,
            delta: rule.delta,
            max_iter: opts.max_iter,
            eps_stop: opts.eps_stop,
            m: opts.m,
            n_inverse: opts.n_inverse,
            jacobian: opts.jacobian,
            penalty: opts.penalty,
            incident: preset.incident.clone(),
            samples: opts.samples,
            seed,
        };
        let q0 = TrigShape::circle(preset.init_radius, opts.m)?;
        lm_reconstruct(&data, &q0, &cfg, Some(&preset.shape))
    };
    match attempt() {
        Ok(run) => {
            let e_bar = run
                .posterior
                .as_ref()
                .and_then(|p| relative_error(&StarShape::Trig(p.q_bar.clone()), &preset.shape).ok());
            RunRecord {
                lambda,
                delta: rule.delta,
                mu,
                seed,
                e_gamma: run.e_gamma_history.last().copied(),
                e_gamma_bar: e_bar,
                iterations: run.iterations(),
                converged: run.converged,
                error: None,
                run: Some(run),
            }
        }
        Err(e) => RunRecord {
            lambda,
            delta: rule.delta,
            mu,
            seed,
            e_gamma: None,
            e_gamma_bar: None,
            iterations: 0,
            converged: false,
            error: Some(e.to_string()),
            run: None,
        },
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Runs every `(λ, δ, seed)` combination of the preset.
///
/// Individual failures are recorded in the rows and excluded from the means.
pub fn run_experiment(preset: &ExperimentPreset, seeds: &[u64], opts: &ExperimentOptions) -> Result<ExperimentResult> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let mut jobs = Vec::new();
    for &lambda in &preset.lambdas {
        for &rule in &preset.mu_rules {
            for &seed in seeds {
                jobs.push((lambda, rule, seed));
            }
        }
    }
    let records = par::map(&jobs, |&(lambda, rule, seed)| single_run(preset, opts, lambda, rule, seed));
    let mut summary = Vec::new();
    for &lambda in &preset.lambdas {
        for rule in &preset.mu_rules {
            let rows: Vec<&RunRecord> = records.iter().filter(|r| r.lambda == lambda && r.delta == rule.delta).collect();
            let e: Vec<f64> = rows.iter().filter_map(|r| r.e_gamma).collect();
            let e_bar: Vec<f64> = rows.iter().filter_map(|r| r.e_gamma_bar).collect();
            let (mean, std) = mean_std(&e);
            summary.push(SummaryRow {
                lambda,
                delta: rule.delta,
                runs: rows.len(),
                failures: rows.len() - e.len(),
                mean_e_gamma: mean,
                std_e_gamma: std,
                mean_e_gamma_bar: (!e_bar.is_empty()).then(|| mean_std(&e_bar).0),
            });
        }
    }
    Ok(ExperimentResult {
        preset: preset.clone(),
        options: opts.clone(),
        seeds: seeds.to_vec(),
        summary,
        records,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `experiment.json`, `summary.csv`, `runs.csv`, `iterates.csv`,
/// `bands.csv` and `singulars.csv` into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("experiment.json"), serde_json::to_string_pretty(result)? + "\n")?;

    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(["lambda_re", "lambda_im", "delta", "runs", "failures", "mean_e_gamma", "std_e_gamma", "mean_e_gamma_bar"])?;
    for s in &result.summary {
        w.write_record([
            s.lambda.re.to_string(),
            s.lambda.im.to_string(),
            s.delta.to_string(),
            s.runs.to_string(),
            s.failures.to_string(),
            s.mean_e_gamma.to_string(),
            s.std_e_gamma.to_string(),
            fmt_opt(s.mean_e_gamma_bar),
        ])?;
    }
    w.flush()?;

    let mut runs = csv::Writer::from_path(dir.join("runs.csv"))?;
    runs.write_record(["lambda_re", "lambda_im", "delta", "mu", "seed", "e_gamma", "e_gamma_bar", "iterations", "converged", "error"])?;
    let mut iters = csv::Writer::from_path(dir.join("iterates.csv"))?;
    iters.write_record(["lambda_re", "lambda_im", "delta", "seed", "iteration", "e_gamma", "step_norm", "coeffs"])?;
    let mut bands = csv::Writer::from_path(dir.join("bands.csv"))?;
    bands.write_record(["lambda_re", "lambda_im", "delta", "seed", "t", "q_map", "lower", "upper"])?;
    let mut sv = csv::Writer::from_path(dir.join("singulars.csv"))?;
    sv.write_record(["lambda_re", "lambda_im", "delta", "seed", "index", "singular_value"])?;
    for r in &result.records {
        let key = [r.lambda.re.to_string(), r.lambda.im.to_string(), r.delta.to_string(), r.seed.to_string()];
        runs.write_record([
            key[0].clone(),
            key[1].clone(),
            key[2].clone(),
            r.mu.to_string(),
            key[3].clone(),
            fmt_opt(r.e_gamma),
            fmt_opt(r.e_gamma_bar),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
        let Some(run) = &r.run else { continue };
        for (k, q) in run.iterates.iter().enumerate() {
            let coeffs = q.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
            let mut row = key.to_vec();
            row.extend([
                k.to_string(),
                fmt_opt(run.e_gamma_history.get(k).copied()),
                fmt_opt(k.checked_sub(1).map(|i| run.step_norms[i])),
                coeffs,
            ]);
            iters.write_record(&row)?;
        }
        if let Some(post) = &run.posterior {
            let b = &post.bands;
            for i in 0..b.t.len() {
                let mut row = key.to_vec();
                row.extend([b.t[i].to_string(), b.q_map[i].to_string(), b.lower[i].to_string(), b.upper[i].to_string()]);
                bands.write_record(&row)?;
            }
        }
        for (i, s) in run.singular_values.iter().enumerate() {
            let mut row = key.to_vec();
            row.extend([i.to_string(), s.to_string()]);
            sv.write_record(&row)?;
        }
    }
    for w in [&mut runs, &mut iters, &mut bands, &mut sv] {
        w.flush()?;
    }
    let mut readme = fs::File::create(dir.join("columns.txt"))?;
    writeln!(
        readme,
        "summary.csv: mean/std of the final relative error per (lambda, delta)\n\
         runs.csv: one row per (lambda, delta, seed)\n\
         iterates.csv: coefficient vectors (a0..am b1..bm, space separated) per iteration\n\
         bands.csv: 95% pointwise band of the radial function\n\
         singulars.csv: singular values of the stacked Jacobian at the final iterate"
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_examples() {
        let p = ExperimentPreset::by_name("example1").unwrap();
        assert_eq!(p.init_radius, 0.6);
        assert_eq!(p.lambdas[2], C64::new(-0.98, 0.0));
        assert_eq!(p.mu_rules[1].mu, MuChoice::Fixed(0.05));
        let p = ExperimentPreset::by_name("example4").unwrap();
        assert!((p.shape.radius(0.0) - 0.87).abs() < 1e-12);
        assert!(ExperimentPreset::by_name("example9").is_err());
        for name in ExperimentPreset::names() {
            assert!(ExperimentPreset::by_name(name).is_ok());
        }
    }

    #[test]
    fn tiny_experiment_is_reproducible() {
        let mut preset = ExperimentPreset::by_name("example1").unwrap();
        preset.lambdas.truncate(1);
        preset.mu_rules.truncate(1);
        preset.grid = MeasurementGrid::new(3.0, 16).unwrap();
        let opts = ExperimentOptions { m: 1, n_forward: 40, n_inverse: 32, max_iter: 5, samples: 50, ..Default::default() };
        let a = run_experiment(&preset, &[1, 2], &opts).unwrap();
        let b = run_experiment(&preset, &[1, 2], &opts).unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        write_outputs(&a, dir_a.path()).unwrap();
        write_outputs(&b, dir_b.path()).unwrap();
        for f in ["experiment.json", "summary.csv", "runs.csv", "iterates.csv", "bands.csv", "singulars.csv"] {
            let x = fs::read(dir_a.path().join(f)).unwrap();
            let y = fs::read(dir_b.path().join(f)).unwrap();
            assert_eq!(x, y, "{f}");
            assert!(!x.is_empty());
        }
        assert_eq!(a.records.len(), 2);
        assert!(a.records.iter().all(|r| r.error.is_none()));
    }
}
