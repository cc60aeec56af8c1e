use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde_json::json;

use plasmoshape::experiment::{run_experiment, write_outputs, ExperimentOptions, ExperimentPreset};
use plasmoshape::forward::{add_noise, forward_map, IncidentField, MeasurementGrid, NoiseModel};
use plasmoshape::geometry::{discretize, DiscreteCurve, Ellipse, StarShape, TrigShape};
use plasmoshape::inversion::{lm_reconstruct, InversionConfig, MuChoice, Penalty, ReconstructionRun};
use plasmoshape::layer_potentials::LayerOperators;
use plasmoshape::material::{resonance_frequencies, DrudeParams, Inclusion, MaterialConfig, EPS0};
use plasmoshape::sensitivity::{sensitivity_kernel, spectral_ssf, JacobianMethod, SpectralCoupling};
use plasmoshape::spectrum::{np_spectrum, spectral_distance, DEFAULT_MODES};

/// Plasmon-resonance shape sensitivity and reconstruction.
///
/// The worker thread count follows RAYON_NUM_THREADS.
#[derive(Parser)]
#[command(name = "plasmoshape", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of the Neumann–Poincaré operator.
    Spectrum(SpectrumArgs),
    /// Drude frequencies at which Re λ(ω) meets each eigenvalue.
    Resonance(ResonanceArgs),
    /// Scattered field on the measurement circle.
    Forward(ForwardArgs),
    /// Direct and spectral shape sensitivity for one perturbation.
    Ssf(SsfArgs),
    /// Regularized Levenberg–Marquardt reconstruction from synthetic data.
    Reconstruct(ReconstructArgs),
    /// Multi-seed preset experiment.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct ShapeArgs {
    /// Preset (disk05, bean, peanut, pear) or JSON `{"a": [...], "b": [...]}`.
    /// `spectrum` and `ssf` also accept `ellipse:A,B`.
    #[arg(long, default_value = "bean")]
    shape: String,
}

impl ShapeArgs {
    fn parse(&self) -> Result<StarShape> {
        StarShape::from_str(&self.shape).with_context(|| format!("invalid shape {:?}", self.shape))
    }

    fn curve(&self, n: usize) -> Result<DiscreteCurve> {
        if let Some(axes) = self.shape.strip_prefix("ellipse") {
            let axes = axes.trim_start_matches(':');
            let (a, b) = if axes.is_empty() {
                (1.0, 0.5)
            } else {
                let (a, b) = axes.split_once(',').context("expected ellipse:A,B")?;
                (a.trim().parse()?, b.trim().parse()?)
            };
            if !(a > 0.0 && b > 0.0) {
                bail!("ellipse semi-axes must be positive");
            }
            return Ok(DiscreteCurve::from_curve(&Ellipse { a, b }, n)?);
        }
        Ok(discretize(&self.parse()?, n)?)
    }
}

#[derive(Args)]
struct ContrastArgs {
    /// Contrast parameter, e.g. `0.25-1e-6i`.
    #[arg(long, conflicts_with = "drude", allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Derive λ from the Drude model instead.
    #[arg(long, requires = "omega")]
    drude: bool,
    /// Angular frequency ω (rad/s).
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, default_value_t = 2e15)]
    omega_p: f64,
    #[arg(long, default_value_t = 1e14)]
    gamma: f64,
    /// Background permittivity in F/m (defaults to ε₀).
    #[arg(long)]
    eps_m: Option<f64>,
}

impl ContrastArgs {
    fn lambda(&self) -> Result<C64> {
        if self.drude {
            let params = DrudeParams::new(self.omega_p, self.gamma)?;
            let omega = self.omega.context("--drude needs --omega")?;
            let cfg = MaterialConfig::new(self.eps_m.unwrap_or(EPS0), Inclusion::Drude { params, omega })?;
            return Ok(cfg.lambda()?);
        }
        match &self.lambda {
            Some(s) => parse_complex(s),
            None => bail!("either --lambda or --drude --omega is required"),
        }
    }
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 3.0)]
    radius: f64,
    #[arg(long, default_value_t = 64)]
    count: usize,
}

impl GridArgs {
    fn grid(&self) -> Result<MeasurementGrid> {
        Ok(MeasurementGrid::new(self.radius, self.count)?)
    }
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_MODES)]
    modes: usize,
    /// Directory for spectrum.json and spectrum.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ResonanceArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_MODES)]
    modes: usize,
    #[arg(long, default_value_t = 2e15)]
    omega_p: f64,
    #[arg(long, default_value_t = 1e14)]
    gamma: f64,
    /// Background permittivity in F/m (defaults to ε₀).
    #[arg(long)]
    eps_m: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    Absolute,
    Relative,
}

impl From<Noise> for NoiseModel {
    fn from(n: Noise) -> Self {
        match n {
            Noise::Absolute => NoiseModel::Absolute,
            Noise::Relative => NoiseModel::Relative,
        }
    }
}

#[derive(Args)]
struct ForwardArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[command(flatten)]
    contrast: ContrastArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 80)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "absolute")]
    noise: Noise,
    /// Directory for field.csv and field.json; CSV goes to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Coupling {
    Adjoint,
    AsStated,
}

#[derive(Args)]
struct SsfArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[command(flatten)]
    contrast: ContrastArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 128)]
    n: usize,
    /// Perturbation: `one`, `cosK`, `sinK`, or JSON `{"a": [...], "b": [...]}`.
    #[arg(long, default_value = "cos2")]
    h: String,
    #[arg(long, default_value_t = DEFAULT_MODES)]
    modes: usize,
    #[arg(long, value_enum, default_value = "adjoint")]
    coupling: Coupling,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Jac {
    Fd,
    Ssf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    Identity,
    Parseval,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[command(flatten)]
    contrast: ContrastArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Regularization parameter or `uniform` for a seeded U(0, 1) draw.
    #[arg(long, default_value = "0.01")]
    mu: String,
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long, default_value_t = 80)]
    n_forward: usize,
    #[arg(long, default_value_t = 64)]
    n_inverse: usize,
    /// Radius of the initial circle.
    #[arg(long, default_value_t = 0.6)]
    init: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-5)]
    eps_stop: f64,
    #[arg(long, value_enum, default_value = "fd")]
    jacobian: Jac,
    #[arg(long, default_value_t = 1e-5)]
    fd_step: f64,
    #[arg(long, value_enum, default_value = "identity")]
    penalty: PenaltyArg,
    #[arg(long, value_enum, default_value = "absolute")]
    noise: Noise,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// example1, example2, example3, example4 or example4-random-mu.
    #[arg(long)]
    preset: String,
    /// Number of noise seeds (0, 1, ..., seeds-1).
    #[arg(long, default_value_t = 16)]
    seeds: u64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_complex(s: &str) -> Result<C64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    C64::from_str(&t).map_err(|e| anyhow::anyhow!("invalid complex number {s:?}: {e}"))
}

fn parse_h(spec: &str) -> Result<Box<dyn Fn(f64) -> f64>> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(spec)?;
        let vec_of = |key: &str| -> Result<Vec<f64>> {
            Ok(serde_json::from_value(v.get(key).cloned().unwrap_or(json!([])))?)
        };
        let shape = TrigShape::new_unchecked(vec_of("a")?, vec_of("b")?)?;
        return Ok(Box::new(move |t| shape.radius(t)));
    }
    if spec == "one" {
        return Ok(Box::new(|_| 1.0));
    }
    let (f, k): (fn(f64) -> f64, &str) = if let Some(k) = spec.strip_prefix("cos") {
        (f64::cos, k)
    } else if let Some(k) = spec.strip_prefix("sin") {
        (f64::sin, k)
    } else {
        bail!("perturbation must be one, cosK, sinK or a JSON coefficient object, got {spec:?}");
    };
    let k: f64 = k.parse().with_context(|| format!("invalid mode in {spec:?}"))?;
    Ok(Box::new(move |t| f(k * t)))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn spectrum(args: SpectrumArgs) -> Result<()> {
    let curve = args.shape.curve(args.n)?;
    let ops = LayerOperators::new(&curve);
    let spec = np_spectrum(&ops, args.modes)?;
    let report = json!({
        "shape": args.shape.shape,
        "n": args.n,
        "lambdas": spec.lambdas,
        "asymmetry": spec.asymmetry,
    });
    let mut csv = String::from("j,lambda\n");
    for (j, l) in spec.lambdas.iter().enumerate() {
        csv += &format!("{j},{l}\n");
    }
    match args.out {
        Some(dir) => {
            write_file(&dir, "spectrum.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
            write_file(&dir, "spectrum.csv", &csv)?;
        }
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

fn resonance(args: ResonanceArgs) -> Result<()> {
    let curve = args.shape.curve(args.n)?;
    let ops = LayerOperators::new(&curve);
    let spec = np_spectrum(&ops, args.modes)?;
    let params = DrudeParams::new(args.omega_p, args.gamma)?;
    let res = resonance_frequencies(&params, args.eps_m.unwrap_or(EPS0), &spec.lambdas)?;
    let mut csv = String::from("j,lambda_j,omega,lambda_re,lambda_im\n");
    for r in &res {
        if r.roots.is_empty() {
            csv += &format!("{},{},,,\n", r.mode, r.lambda_j);
        }
        for root in &r.roots {
            csv += &format!("{},{},{},{},{}\n", r.mode, r.lambda_j, root.omega, root.lambda.re, root.lambda.im);
        }
    }
    match args.out {
        Some(dir) => write_file(&dir, "resonance.csv", &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn forward(args: ForwardArgs) -> Result<()> {
    let shape = args.shape.parse()?;
    let lambda = args.contrast.lambda()?;
    let grid = args.grid.grid()?;
    let clean = forward_map(&shape, args.n, lambda, &IncidentField::x1(), &grid)?;
    let data = add_noise(&clean, args.delta, args.seed, args.noise.into())?;
    let mut csv = String::from("t,re,im\n");
    for (t, v) in grid.angles().iter().zip(&data.values) {
        csv += &format!("{t},{},{}\n", v.re, v.im);
    }
    match args.out {
        Some(dir) => {
            let meta = json!({
                "shape": args.shape.shape,
                "n": args.n,
                "lambda": [lambda.re, lambda.im],
                "radius": data.radius,
                "count": data.count,
                "delta": data.noise_level,
                "noise_model": data.noise_model,
                "seed": data.seed,
            });
            write_file(&dir, "field.csv", &csv)?;
            write_file(&dir, "field.json", &(serde_json::to_string_pretty(&meta)? + "\n"))?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn ssf(args: SsfArgs) -> Result<()> {
    let lambda = args.contrast.lambda()?;
    let grid = args.grid.grid()?;
    let h = parse_h(&args.h)?;
    let curve = args.shape.curve(args.n)?;
    let ops = LayerOperators::new(&curve);
    let hv: Vec<f64> = curve.t.iter().map(|&t| h(t)).collect();
    let incident = IncidentField::x1();
    let direct = sensitivity_kernel(&ops, lambda, &incident, &grid)?.pair(&hv);
    let spec = np_spectrum(&ops, args.modes)?;
    let coupling = match args.coupling {
        Coupling::Adjoint => SpectralCoupling::Adjoint,
        Coupling::AsStated => SpectralCoupling::AsStated,
    };
    let spectral = spectral_ssf(&ops, &spec, lambda, &incident, &grid, &hv, coupling)?;
    let norm = |v: &[C64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let diff: Vec<C64> = direct.iter().zip(&spectral.values).map(|(a, b)| a - b).collect();
    let discrepancy = norm(&diff) / norm(&direct);
    let mut csv = String::from("t,direct_re,direct_im,spectral_re,spectral_im\n");
    for ((t, d), s) in grid.angles().iter().zip(&direct).zip(&spectral.values) {
        csv += &format!("{t},{},{},{},{}\n", d.re, d.im, s.re, s.im);
    }
    let summary = json!({
        "shape": args.shape.shape,
        "n": args.n,
        "lambda": [lambda.re, lambda.im],
        "h": args.h,
        "modes": spectral.modes,
        "relative_discrepancy": discrepancy,
        "tail": spectral.tail,
        "dist_sq": spectral.dist_sq,
        "dist": spectral_distance(lambda, &spec, false)?,
    });
    match args.out {
        Some(dir) => {
            write_file(&dir, "ssf.csv", &csv)?;
            write_file(&dir, "ssf.json", &(serde_json::to_string_pretty(&summary)? + "\n"))?;
        }
        None => {
            print!("{csv}");
            eprintln!("{}", serde_json::to_string_pretty(&summary)?);
        }
    }
    Ok(())
}

fn write_run(dir: &Path, meta: serde_json::Value, run: &ReconstructionRun) -> Result<()> {
    let run_json = json!({
        "config": meta,
        "converged": run.converged,
        "iterations": run.iterations(),
        "mu": run.mu,
        "q_map": run.q_map,
        "e_gamma_history": run.e_gamma_history,
        "step_norms": run.step_norms,
        "posterior": run.posterior.as_ref().map(|p| json!({
            "q_bar": p.q_bar,
            "samples": p.samples,
            "mean_offset": p.mean_offset,
            "band_mean_width": p.bands.mean_width(),
            "c_map": p.c_map,
        })),
    });
    write_file(dir, "run.json", &(serde_json::to_string_pretty(&run_json)? + "\n"))?;

    let mut it = String::from("iteration,e_gamma,step_norm,coeffs\n");
    for (k, q) in run.iterates.iter().enumerate() {
        let e = run.e_gamma_history.get(k).map(|v| v.to_string()).unwrap_or_default();
        let s = k.checked_sub(1).map(|i| run.step_norms[i].to_string()).unwrap_or_default();
        let c: Vec<String> = q.coeffs().iter().map(|v| v.to_string()).collect();
        it += &format!("{k},{e},{s},{}\n", c.join(" "));
    }
    write_file(dir, "iterates.csv", &it)?;

    let mut bands = String::from("t,q_map,lower,upper\n");
    if let Some(p) = &run.posterior {
        let b = &p.bands;
        for i in 0..b.t.len() {
            bands += &format!("{},{},{},{}\n", b.t[i], b.q_map[i], b.lower[i], b.upper[i]);
        }
    }
    write_file(dir, "bands.csv", &bands)?;

    let mut sv = String::from("index,singular_value\n");
    for (i, s) in run.singular_values.iter().enumerate() {
        sv += &format!("{i},{s}\n");
    }
    write_file(dir, "singulars.csv", &sv)
}

fn reconstruct(args: ReconstructArgs) -> Result<()> {
    let shape = args.shape.parse()?;
    let lambda = args.contrast.lambda()?;
    let grid = args.grid.grid()?;
    let mu = match args.mu.as_str() {
        "uniform" => MuChoice::Uniform,
        v => MuChoice::Fixed(v.parse().with_context(|| format!("invalid --mu {v:?}"))?),
    }
    .resolve(args.seed);
    let incident = IncidentField::x1();
    let clean = forward_map(&shape, args.n_forward, lambda, &incident, &grid)?;
    let data = add_noise(&clean, args.delta, args.seed, args.noise.into())?;
    let cfg = InversionConfig {
        mu,
        delta: args.delta,
        max_iter: args.max_iter,
        eps_stop: args.eps_stop,
        m: args.m,
        n_inverse: args.n_inverse,
        jacobian: match args.jacobian {
            Jac::Fd => JacobianMethod::FiniteDifference { eta: args.fd_step },
            Jac::Ssf => JacobianMethod::Ssf,
        },
        penalty: match args.penalty {
            PenaltyArg::Identity => Penalty::Identity,
            PenaltyArg::Parseval => Penalty::Parseval,
        },
        incident,
        samples: args.samples,
        seed: args.seed,
    };
    let q0 = TrigShape::circle(args.init, args.m)?;
    let run = lm_reconstruct(&data, &q0, &cfg, Some(&shape))?;
    let meta = json!({
        "shape": args.shape.shape,
        "lambda": [lambda.re, lambda.im],
        "n_forward": args.n_forward,
        "init_radius": args.init,
        "inversion": cfg,
        "grid": grid,
        "noise_model": data.noise_model,
    });
    write_run(&args.out, meta, &run)?;
    let last = run.e_gamma_history.last().copied().unwrap_or(f64::NAN);
    println!(
        "iterations={} converged={} e_gamma={last:e} out={}",
        run.iterations(),
        run.converged,
        args.out.display()
    );
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let preset = ExperimentPreset::by_name(&args.preset)?;
    let opts = ExperimentOptions { samples: args.samples, max_iter: args.max_iter, m: args.m, ..Default::default() };
    let seeds: Vec<u64> = (0..args.seeds).collect();
    let result = run_experiment(&preset, &seeds, &opts)?;
    write_outputs(&result, &args.out)?;
    println!("lambda,delta,runs,failures,mean_e_gamma,std_e_gamma");
    for s in &result.summary {
        println!(
            "{},{},{},{},{:e},{:e}",
            s.lambda, s.delta, s.runs, s.failures, s.mean_e_gamma, s.std_e_gamma
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Spectrum(a) => spectrum(a),
        Command::Resonance(a) => resonance(a),
        Command::Forward(a) => forward(a),
        Command::Ssf(a) => ssf(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Experiment(a) => experiment(a),
    }
}
