//! `bcl` subcommands.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bcl_core::dynamics::{Initial, Mode, Replacement, RunParams, StopRule, Trajectory, DEFAULT_TOL};
use bcl_core::estimators::{empirical_moments, fit_beta_symmetric, fit_beta_symmetric_binned, Histogram, KsFitResult};
use bcl_core::exact3::{theta_recursion, to_f64, xi3_moments_from_init, DiscreteInit, Rational};
use bcl_core::rng::replica_rng;
use bcl_core::spacings::UniformInit;
use bcl_core::Configuration;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{fraction_string, resolve_threads, ExperimentConfig, InitSpec};
use crate::error::{CliError, CliResult};
use crate::formats::{self, PiRow};
use crate::replicas;
use crate::selftest;

/// Largest `--k-max` accepted by `exact3`.
pub const MAX_EXACT_K: u32 = 40;

#[derive(Debug, Parser)]
#[command(name = "bcl", version, about = "Iterated Keynesian beauty contest: simulation, fitting and exact N=3 moments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run independent replicas and write the histogram and summary of the limit estimates.
    Simulate(SimulateArgs),
    /// Fit a symmetric Beta law to samples or a histogram by minimum KS distance.
    FitBeta(FitArgs),
    /// Exact theta table and moments of the limit in the modified N=3 model.
    Exact3(Exact3Args),
    /// Trace of the left-removal fraction pi_N against the core mean (d = 1).
    PiTrace(PiTraceArgs),
    /// Run the fast invariant suite.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Naive,
    EventSkip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Standard,
    Modified3,
}

fn mode_name(m: ModeArg) -> &'static str {
    match m {
        ModeArg::Naive => "naive",
        ModeArg::EventSkip => "event-skip",
    }
}

fn model_name(m: ModelArg) -> &'static str {
    match m {
        ModelArg::Standard => "standard",
        ModelArg::Modified3 => "modified3",
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Start from a saved config (bare, or any output JSON with a `config` field); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stop once the core diameter is below this.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// `uniform` or `list:x1,x2,...` (N·d numbers, point by point).
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Histogram range; defaults to [0, 1], or the sample range for modified3.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub hist_range: Option<Vec<f64>>,
    /// Highest empirical moment in the summary.
    #[arg(long)]
    pub k_max: Option<u32>,
    /// Worker threads (0 = all cores); `BCL_THREADS` takes precedence.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out_hist: Option<PathBuf>,
    #[arg(long)]
    pub out_summary: Option<PathBuf>,
    /// Raw estimates, one row per replica.
    #[arg(long)]
    pub out_samples: Option<PathBuf>,
    /// Trajectory trace of replica 0.
    #[arg(long)]
    pub out_trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub trace_stride: u64,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["in_hist", "in_samples"])))]
pub struct FitArgs {
    #[arg(long)]
    pub in_hist: Option<PathBuf>,
    #[arg(long)]
    pub in_samples: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Exact3Args {
    #[arg(long, default_value_t = 6)]
    pub k_max: u32,
    /// `uniform` or `list:a,b,c` (decimals or fractions, read exactly).
    #[arg(long, default_value = "uniform")]
    pub init: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PiTraceArgs {
    #[arg(long, default_value_t = 3)]
    pub n_points: usize,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub stride: u64,
    #[arg(long, default_value = "uniform")]
    pub init: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Smaller sample counts.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

/// Parses `args`, runs the command and maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::SelftestFailed) {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::FitBeta(a) => fit_beta(a),
        Command::Exact3(a) => exact3(a),
        Command::PiTrace(a) => pi_trace(a),
        Command::Selftest(a) => run_selftest(a),
    }
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| CliError::io("<stdout>", e))
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    match out {
        Some(p) => formats::write_json(p, value),
        None => print_json(value),
    }
}

/// Initial state for `n_points` points in dimension `dim`.
fn initial_from(spec: &InitSpec, n_points: usize, dim: usize) -> CliResult<Initial> {
    match spec {
        InitSpec::Uniform => Ok(Initial::IidUniform),
        InitSpec::List(items) => {
            let xs = InitSpec::floats(items)?;
            if xs.len() != n_points * dim {
                return Err(CliError::usage(format!(
                    "--init list has {} numbers; {n_points} points in dimension {dim} need {}",
                    xs.len(),
                    n_points * dim
                )));
            }
            let config = Configuration::new(dim, xs)?;
            if !config.has_distinct_points() {
                return Err(CliError::usage("--init points must be distinct"));
            }
            Ok(Initial::Points(config))
        }
    }
}

/// Adds `_x{c}` before the extension of `path`.
fn coordinate_path(path: &Path, c: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_x{c}.{}", ext.to_string_lossy()),
        None => format!("{stem}_x{c}"),
    };
    path.with_file_name(name)
}

#[derive(Serialize)]
struct MomentRow {
    coord: usize,
    k: u32,
    value: f64,
    std_err: f64,
}

#[derive(Serialize)]
struct Runtime {
    threads: usize,
    seconds: f64,
}

#[derive(Serialize)]
struct SimulateSummary {
    config: ExperimentConfig,
    replicas: u64,
    mean_steps: f64,
    event_a_count: u64,
    event_a_prime_count: u64,
    converged: u64,
    absorbed: u64,
    moments: Vec<MomentRow>,
    runtime: Runtime,
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let base = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::new("simulate"),
    };
    let mode = match a.mode {
        Some(m) => m,
        None => match base.mode.as_deref() {
            None | Some("event-skip") => ModeArg::EventSkip,
            Some("naive") => ModeArg::Naive,
            Some(other) => return Err(CliError::usage(format!("unknown mode `{other}` in config"))),
        },
    };
    let model = match a.model {
        Some(m) => m,
        None => match base.model.as_deref() {
            None | Some("standard") => ModelArg::Standard,
            Some("modified3") => ModelArg::Modified3,
            Some(other) => return Err(CliError::usage(format!("unknown model `{other}` in config"))),
        },
    };
    let n_points = a.n_points.or(base.n_points).unwrap_or(3);
    let dim = a.dim.or(base.dim).unwrap_or(1);
    let replicas = a.replicas.or(base.replicas).unwrap_or(100_000);
    let seed = a.seed.or(base.seed).unwrap_or(0);
    let tol = a.tol.or(base.tol).unwrap_or(DEFAULT_TOL);
    let init = InitSpec::parse(a.init.as_deref().or(base.init.as_deref()).unwrap_or("uniform"))?;
    let bins = a.bins.or(base.bins).unwrap_or(Histogram::DEFAULT_BINS);
    let k_max = a.k_max.or(base.k_max).unwrap_or(6);
    let hist_range = match a.hist_range.as_deref() {
        Some([lo, hi]) => Some([*lo, *hi]),
        Some(_) => unreachable!("clap enforces two values"),
        None => base.hist_range,
    };

    if replicas == 0 {
        return Err(CliError::usage("--replicas must be at least 1"));
    }
    if bins == 0 {
        return Err(CliError::usage("--bins must be at least 1"));
    }
    if k_max == 0 {
        return Err(CliError::usage("--k-max must be at least 1"));
    }
    if model == ModelArg::Modified3 && (n_points != 3 || dim != 1) {
        return Err(CliError::usage("the modified3 model has 3 points in dimension 1"));
    }
    if a.trace_stride == 0 {
        return Err(CliError::usage("--trace-stride must be at least 1"));
    }

    let mut params = RunParams::new(n_points, dim)
        .with_seed(seed)
        .with_stop(StopRule::DiameterBelow(tol))
        .with_mode(if mode == ModeArg::Naive { Mode::Naive } else { Mode::EventSkip });
    if model == ModelArg::Modified3 {
        params.replacement = Replacement::AdaptiveInterval;
    }
    params.validate()?;
    let initial = initial_from(&init, n_points, dim)?;
    let threads = resolve_threads(a.threads)?;

    let mut outputs = Vec::new();
    for p in [&a.out_hist, &a.out_summary, &a.out_samples, &a.out_trace].into_iter().flatten() {
        outputs.push(p.display().to_string());
    }
    let config = ExperimentConfig {
        command: "simulate".into(),
        n_points: Some(n_points),
        dim: Some(dim),
        replicas: Some(replicas),
        seed: Some(seed),
        tol: Some(tol),
        mode: Some(mode_name(mode).into()),
        model: Some(model_name(model).into()),
        init: Some(init.to_text()),
        bins: Some(bins),
        hist_range,
        k_max: Some(k_max),
        outputs: (!outputs.is_empty()).then_some(outputs),
        ..Default::default()
    };

    let started = Instant::now();
    let batch = replicas::simulate(&params, &initial, replicas, threads)?;
    let seconds = started.elapsed().as_secs_f64();

    let mut moments = Vec::new();
    let mut hists = Vec::new();
    for c in 0..dim {
        let xs = batch.coordinate(c);
        let table = empirical_moments(&xs, k_max)?;
        moments.extend(table.entries.iter().map(|e| MomentRow { coord: c, k: e.k, value: e.value, std_err: e.std_err }));
        let [lo, hi] = hist_range.unwrap_or_else(|| match model {
            ModelArg::Standard => [0.0, 1.0],
            ModelArg::Modified3 => {
                let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if hi > lo { [lo, hi] } else { [lo - 0.5, lo + 0.5] }
            }
        });
        let mut h = Histogram::new(lo, hi, bins)?;
        h.extend(xs);
        hists.push(h);
    }

    if let Some(path) = &a.out_hist {
        for (c, h) in hists.iter().enumerate() {
            let target = if dim == 1 { path.clone() } else { coordinate_path(path, c) };
            formats::write_file(&target, |w| formats::write_histogram(w, h, &config))?;
        }
    }
    if let Some(path) = &a.out_samples {
        formats::write_file(path, |w| formats::write_samples(w, dim, &batch.xi, &config))?;
    }
    if let Some(path) = &a.out_trace {
        let traced = RunParams { trace_stride: Some(a.trace_stride), ..params.clone() };
        let mut traj = Trajectory::new(&traced, &initial, replica_rng(seed, 0))?;
        let converged = traj.advance(traced.stop);
        let result = traj.into_result(converged);
        let trace = result.trace.unwrap_or_default();
        formats::write_file(path, |w| formats::write_trace(w, dim, &trace, &config))?;
    }
    let summary = SimulateSummary {
        config,
        replicas: batch.replicas,
        mean_steps: batch.mean_steps(),
        event_a_count: batch.event_a,
        event_a_prime_count: batch.event_a_prime,
        converged: batch.converged,
        absorbed: batch.absorbed,
        moments,
        runtime: Runtime { threads, seconds },
    };
    emit_json(a.out_summary.as_deref(), &summary)
}

#[derive(Serialize)]
struct FitOutput {
    beta_star: f64,
    kappa: f64,
    n: u64,
    config: ExperimentConfig,
}

fn fit_beta(a: FitArgs) -> CliResult<()> {
    let mut config = ExperimentConfig::new("fit-beta");
    let fit: KsFitResult = if let Some(path) = &a.in_hist {
        config.input = Some(path.display().to_string());
        let h = formats::read_histogram(formats::open(path)?).map_err(|e| CliError::parse(path, e))?;
        if h.total() == 0 {
            return Err(CliError::usage(format!("{}: histogram is empty", path.display())));
        }
        fit_beta_symmetric_binned(&h)?
    } else {
        let path = a.in_samples.as_ref().expect("clap requires one input");
        config.input = Some(path.display().to_string());
        let xs = formats::read_samples(formats::open(path)?).map_err(|e| CliError::parse(path, e))?;
        if xs.is_empty() {
            return Err(CliError::usage(format!("{}: no samples", path.display())));
        }
        fit_beta_symmetric(&xs)?
    };
    if let Some(p) = &a.out {
        config.outputs = Some(vec![p.display().to_string()]);
    }
    emit_json(a.out.as_deref(), &FitOutput { beta_star: fit.beta_star, kappa: fit.kappa, n: fit.n_samples, config })
}

#[derive(Serialize)]
struct ExactEntry {
    k: u32,
    num: String,
    den: String,
    fraction: String,
    float: f64,
}

impl ExactEntry {
    fn new(k: u32, v: &Rational) -> Self {
        ExactEntry { k, num: v.numer().to_string(), den: v.denom().to_string(), fraction: fraction_string(v), float: to_f64(v) }
    }
}

#[derive(Serialize)]
struct ExactOutput {
    config: ExperimentConfig,
    theta: Vec<ExactEntry>,
    moments: Vec<ExactEntry>,
}

fn exact3(a: Exact3Args) -> CliResult<()> {
    if a.k_max > MAX_EXACT_K {
        return Err(CliError::usage(format!("--k-max must be at most {MAX_EXACT_K}")));
    }
    let init = InitSpec::parse(&a.init)?;
    let theta = theta_recursion(a.k_max);
    let moments = match &init {
        InitSpec::Uniform => xi3_moments_from_init(&UniformInit, a.k_max)?,
        InitSpec::List(items) => {
            let xs = InitSpec::rationals(items)?;
            let [x, y, z]: [Rational; 3] = xs
                .try_into()
                .map_err(|_| CliError::usage("--init list for exact3 needs exactly three numbers"))?;
            let law = DiscreteInit::three_points([x, y, z]).map_err(|_| CliError::usage("--init points must be distinct"))?;
            xi3_moments_from_init(&law, a.k_max)?
        }
    };
    let mut config = ExperimentConfig::new("exact3");
    config.k_max = Some(a.k_max);
    config.init = Some(init.to_text());
    if let Some(p) = &a.out {
        config.outputs = Some(vec![p.display().to_string()]);
    }
    let out = ExactOutput {
        config,
        theta: theta.theta.iter().enumerate().map(|(k, v)| ExactEntry::new(k as u32, v)).collect(),
        // k = 0 is the trivial total mass.
        moments: moments.values.iter().enumerate().skip(1).map(|(k, v)| ExactEntry::new(k as u32, v)).collect(),
    };
    emit_json(a.out.as_deref(), &out)
}

fn pi_trace(a: PiTraceArgs) -> CliResult<()> {
    if a.dim != 1 {
        return Err(CliError::usage("pi_N is defined in dimension 1 only"));
    }
    if a.stride == 0 {
        return Err(CliError::usage("--stride must be at least 1"));
    }
    let init = InitSpec::parse(&a.init)?;
    let params = RunParams { require_pi_n: true, ..RunParams::new(a.n_points, 1).with_seed(a.seed) };
    params.validate()?;
    let initial = initial_from(&init, a.n_points, 1)?;
    let mut config = ExperimentConfig::new("pi-trace");
    config.n_points = Some(a.n_points);
    config.dim = Some(1);
    config.steps = Some(a.steps);
    config.seed = Some(a.seed);
    config.stride = Some(a.stride);
    config.mode = Some("naive".into());
    config.init = Some(init.to_text());
    if let Some(p) = &a.out {
        config.outputs = Some(vec![p.display().to_string()]);
    }

    let rows = pi_rows(&params, &initial, a.steps, a.stride)?;
    match &a.out {
        Some(p) => formats::write_file(p, |w| formats::write_pi_trace(w, &rows, &config)),
        None => formats::write_pi_trace(std::io::stdout().lock(), &rows, &config).map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// Runs `steps` naive steps on stream 0 of `params.seed`, recording `π_N`
/// and the core mean every `stride` steps and at the last step.
pub fn pi_rows(params: &RunParams, initial: &Initial, steps: u64, stride: u64) -> bcl_core::Result<Vec<PiRow>> {
    let mut traj = Trajectory::new(params, initial, replica_rng(params.seed, 0))?;
    let mut left = 0u64;
    let mut rows = Vec::new();
    for t in 1..=steps {
        let info = traj.step();
        left += info.removed_on_left.ok_or(bcl_core::Error::MissingSide(t as usize - 1))? as u64;
        if t % stride == 0 || t == steps {
            rows.push(PiRow { t, pi_n: left as f64 / t as f64, core_mean: traj.core_mean()[0] });
        }
    }
    Ok(rows)
}

fn run_selftest(a: SelftestArgs) -> CliResult<()> {
    let report = selftest::run(selftest::Options { quick: a.quick, inject_fault: a.inject_fault, seed: a.seed });
    for c in &report.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if report.pass() {
        println!("all {} checks passed", report.checks.len());
        Ok(())
    } else {
        Err(CliError::SelftestFailed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_paths() {
        assert_eq!(coordinate_path(Path::new("out/h.csv"), 1), PathBuf::from("out/h_x1.csv"));
        assert_eq!(coordinate_path(Path::new("h"), 0), PathBuf::from("h_x0"));
    }

    #[test]
    fn init_lists_are_checked() {
        let spec = InitSpec::parse("list:0.5,0.5,0.7").unwrap();
        assert!(matches!(initial_from(&spec, 3, 1), Err(CliError::Usage(m)) if m.contains("distinct")));
        let spec = InitSpec::parse("list:0.1,0.2").unwrap();
        assert!(initial_from(&spec, 3, 1).is_err());
        let spec = InitSpec::parse("list:0.1,0.2,0.3,0.4").unwrap();
        assert!(initial_from(&spec, 2, 2).is_ok());
    }

    #[test]
    fn pi_rows_follow_stride() {
        let params = RunParams { require_pi_n: true, ..RunParams::new(3, 1).with_seed(1) };
        let rows = pi_rows(&params, &Initial::IidUniform, 25, 10).unwrap();
        assert_eq!(rows.iter().map(|r| r.t).collect::<Vec<_>>(), [10, 20, 25]);
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.pi_n)));
        assert!(pi_rows(&params, &Initial::IidUniform, 0, 10).unwrap().is_empty());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
