//! `margins`: generate instances, compute exact margins, run the perceptron-type
//! algorithms and verify the margin alternatives and error bounds.

mod batch;
mod certify;
mod summary;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use margin_core::algorithms::{alpha_dump, run, write_trace_csv, Algorithm, AlgorithmConfig, Mode};
use margin_core::generate::{generate, GeneratorKind, GeneratorSpec};
use margin_core::margin::{margin_grid_estimate, margin_report_with, DEFAULT_ENUMERATION_BUDGET};
use margin_core::{Error, ProblemInstance};

use crate::summary::summarize;

#[derive(Parser, Debug)]
#[command(name = "margins", version, about = "Margins of linear feasibility instances")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for generation and for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Relative singular-value tolerance for the column-space rank.
    #[arg(long, global = true)]
    pub tol_rank: Option<f64>,
    /// Directory for generated instances, traces and summaries.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, global = true, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Target norm for dual certificates.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub eps: f64,
    /// Also write the dual coefficients of every iterate.
    #[arg(long, global = true)]
    pub dump_alpha: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an instance with a planted margin and write it as JSON.
    Gen(GenArgs),
    /// Print the exact margin report of an instance.
    Margin(MarginArgs),
    /// Run an algorithm, write its trace and a summary of the bound checks.
    Run(RunArgs),
    /// Verify one of the margin alternatives or error bounds on an instance.
    Certify(certify::CertifyArgs),
    /// Generate and run many (instance, algorithm) pairs in parallel.
    Batch(BatchArgs),
    /// Aggregate run summaries in a directory.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(short, long)]
    pub d: usize,
    #[arg(short, long)]
    pub n: usize,
    /// Planted margin; ignored by near-ill-posed.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub target: f64,
    /// Jitter of the negative templates.
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Output file; defaults to `<out-dir>/<kind>-d<d>-n<n>-s<seed>.json`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MarginArgs {
    pub instance: PathBuf,
    /// Largest column count for exact enumeration.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    pub budget: usize,
    /// Also report the grid estimate at this resolution (rank <= 3).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Interval width of the iterative estimate used past the budget.
    #[arg(long, default_value_t = 0.05)]
    pub estimate_eps: f64,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    pub instance: PathBuf,
    #[arg(short, long, value_enum)]
    pub algorithm: AlgorithmArg,
    /// Stopping rule; defaults to primal for the perceptrons and dual for VNG.
    #[arg(short, long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Args, Debug)]
pub struct BatchArgs {
    /// JSON file with `instances` (generator specs), optional `files`, `algorithms`
    /// and optional `mode`.
    pub plan: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directory holding `*.summary.json` files.
    pub dir: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindArg {
    PlantedPositive,
    PlantedNegative,
    NearIllPosed,
    RankDeficient,
}

impl From<KindArg> for GeneratorKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::PlantedPositive => GeneratorKind::PlantedPositive,
            KindArg::PlantedNegative => GeneratorKind::PlantedNegative,
            KindArg::NearIllPosed => GeneratorKind::NearIllPosed,
            KindArg::RankDeficient => GeneratorKind::RankDeficient,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmArg {
    Perceptron,
    #[value(alias = "normalized-perceptron")]
    Np,
    Vng,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Perceptron => Algorithm::Perceptron,
            AlgorithmArg::Np => Algorithm::NormalizedPerceptron,
            AlgorithmArg::Vng => Algorithm::Vng,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    #[value(alias = "primal-feasibility")]
    Primal,
    #[value(alias = "dual-certificate")]
    Dual,
    #[value(alias = "margin-maximization")]
    Margin,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Primal => Mode::PrimalFeasibility,
            ModeArg::Dual => Mode::DualCertificate,
            ModeArg::Margin => Mode::MarginMaximization,
        }
    }
}

pub fn default_mode(algorithm: Algorithm) -> Mode {
    match algorithm {
        Algorithm::Vng => Mode::DualCertificate,
        _ => Mode::PrimalFeasibility,
    }
}

/// Result of a subcommand that completed; maps onto the exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Violation,
    Inapplicable,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Violation => 2,
            Status::Inapplicable => 3,
        }
    }
}

pub fn load_instance(path: &Path, global: &Global) -> anyhow::Result<ProblemInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut instance =
        ProblemInstance::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    if instance.name().is_empty() {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
        instance = instance.with_name(stem);
    }
    match global.tol_rank {
        Some(t) => Ok(instance.with_rank_tolerance(t)?),
        None => Ok(instance),
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Prints to stdout; a closed pipe is not an error.
pub fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

pub fn algorithm_config(global: &Global, mode: Mode) -> anyhow::Result<AlgorithmConfig> {
    let mut config = AlgorithmConfig::new(mode, global.max_iters, global.eps);
    config.seed = global.seed;
    config.validate()?;
    Ok(config)
}

fn cmd_gen(global: &Global, args: &GenArgs) -> anyhow::Result<Status> {
    let mut spec = GeneratorSpec::new(args.kind.into(), args.d, args.n, args.target, global.seed);
    if let Some(j) = args.jitter {
        spec = spec.with_jitter(j);
    }
    let instance = generate(&spec)?;
    let path = match &args.output {
        Some(p) => p.clone(),
        None => {
            fs::create_dir_all(&global.out_dir)?;
            global.out_dir.join(format!("{}.json", spec.default_name()))
        }
    };
    fs::write(&path, instance.to_json()? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    let _ = writeln!(std::io::stdout().lock(), "{}", path.display());
    Ok(Status::Ok)
}

fn cmd_margin(global: &Global, args: &MarginArgs) -> anyhow::Result<Status> {
    let instance = load_instance(&args.instance, global)?;
    let mut out = match margin_report_with(&instance, args.budget) {
        Ok(report) => serde_json::to_value(&report)?,
        Err(Error::BudgetExceeded { .. }) => {
            let (lo, hi) =
                margin_core::algorithms::margin_estimate_np(&instance, args.estimate_eps)?;
            serde_json::json!({
                "method": "iterative",
                "rho_plus_lower": lo.max(0.0),
                "rho_plus_upper": hi,
                "rank": instance.rank(),
                "dim": instance.dim(),
            })
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(res) = args.grid {
        out["grid_estimate"] = serde_json::json!(margin_grid_estimate(&instance, res)?);
        out["grid_resolution"] = serde_json::json!(res);
    }
    print_json(&out)?;
    Ok(Status::Ok)
}

fn cmd_run(global: &Global, args: &RunArgs) -> anyhow::Result<Status> {
    let instance = load_instance(&args.instance, global)?;
    let algorithm: Algorithm = args.algorithm.into();
    let mode = args.mode.map(Mode::from).unwrap_or_else(|| default_mode(algorithm));
    let config = algorithm_config(global, mode)?;
    let outcome = run(algorithm, &instance, &config)?;
    let summary = summarize(&instance, &config, &outcome)?;

    fs::create_dir_all(&global.out_dir)?;
    let stem = format!("{}-{}", instance.name(), algorithm.short_name());
    let csv = global.out_dir.join(format!("{stem}.csv"));
    write_trace_csv(&outcome.trace, fs::File::create(&csv)?)
        .with_context(|| format!("writing {}", csv.display()))?;
    write_json(&global.out_dir.join(format!("{stem}.summary.json")), &summary)?;
    if global.dump_alpha {
        match alpha_dump(&outcome.trace) {
            Some(dump) => write_json(&global.out_dir.join(format!("{stem}.alpha.json")), &dump)?,
            None => eprintln!("note: the classical perceptron keeps no dual coefficients"),
        }
    }
    print_json(&summary)?;
    Ok(if summary.passed() { Status::Ok } else { Status::Violation })
}

fn cmd_report(args: &ReportArgs) -> anyhow::Result<Status> {
    let report = summary::aggregate(&args.dir)?;
    if report.runs == 0 {
        bail!("no *.summary.json files in {}", args.dir.display());
    }
    let status = if report.failed_runs.is_empty() { Status::Ok } else { Status::Violation };
    print_json(&report)?;
    Ok(status)
}

fn dispatch(cli: &Cli) -> anyhow::Result<Status> {
    let g = &cli.global;
    match &cli.command {
        Command::Gen(a) => cmd_gen(g, a),
        Command::Margin(a) => cmd_margin(g, a),
        Command::Run(a) => cmd_run(g, a),
        Command::Certify(a) => certify::cmd_certify(g, a),
        Command::Batch(a) => batch::cmd_batch(g, a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Errors that mean the requested statement does not apply to the instance.
fn is_inapplicable(e: &anyhow::Error) -> bool {
    matches!(
        e.downcast_ref::<Error>(),
        Some(
            Error::Inapplicable(_)
                | Error::IllPosed(_)
                | Error::Precondition(_)
                | Error::OriginNotInHull
                | Error::NotNormalized(_)
        )
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) if is_inapplicable(&e) => {
            eprintln!("{e:#}");
            ExitCode::from(Status::Inapplicable.code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
