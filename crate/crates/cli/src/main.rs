mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use fqcircle_core::{ArcsError, BudgetExceeded, LabError};
use thiserror::Error;

use config::ExperimentConfig;
use report::{Report, Summary, THRESHOLD_VERSION};
use run::Context;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0} (raise the [budget] limit or reduce the instance)")]
    Budget(BudgetExceeded),
    #[error(transparent)]
    Core(fqcircle_core::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl From<ArcsError> for CliError {
    fn from(e: ArcsError) -> Self {
        match e {
            ArcsError::Budget(b) => CliError::Budget(b),
            other => CliError::Core(other.into()),
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Budget(b) | LabError::Arcs(ArcsError::Budget(b)) => CliError::Budget(b),
            other => CliError::Core(other.into()),
        }
    }
}

impl From<BudgetExceeded> for CliError {
    fn from(b: BudgetExceeded) -> Self {
        CliError::Budget(b)
    }
}

#[derive(Parser)]
#[command(name = "fqcircle", version, about = "Exact circle-method experiments over finite fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition identity, direct census and dimension probe.
    Census(Args),
    /// Arc classification, major-arc sums and the minor-arc tail.
    Arcs(Args),
    /// Artinian counts against the closed form.
    Artinian(Args),
    /// Weyl differencing inequality per functional.
    Weyl(Args),
    /// Shrinking counts, K-ratios and Ψ-vanishing on minor arcs.
    Shrink(Args),
    /// Degree and dimension thresholds, with an optional frontier scan.
    Bounds(Args),
    /// Frobenius/Artin–Schreier parameter certificate.
    Fujita(Args),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

type Runner = fn(&Context) -> Result<Vec<serde_json::Value>, CliError>;

impl Command {
    fn parts(&self) -> (&'static str, &Args, Runner) {
        match self {
            Command::Census(a) => ("census", a, run::census_cmd),
            Command::Arcs(a) => ("arcs", a, run::arcs_cmd),
            Command::Artinian(a) => ("artinian", a, run::artinian_cmd),
            Command::Weyl(a) => ("weyl", a, run::weyl_cmd),
            Command::Shrink(a) => ("shrink", a, run::shrink_cmd),
            Command::Bounds(a) => ("bounds", a, run::bounds_cmd),
            Command::Fujita(a) => ("fujita", a, run::fujita_cmd),
        }
    }
}

/// Applies flag overrides, returning the output path and format.
fn apply_overrides(cfg: &mut ExperimentConfig, args: &Args) -> Result<(Option<PathBuf>, Format), CliError> {
    let exp = cfg.experiment.get_or_insert_with(Default::default);
    if let Some(s) = args.seed {
        exp.seed = Some(s);
    }
    if let Some(w) = args.workers {
        exp.workers = Some(w);
    }
    let output = cfg.output.get_or_insert_with(Default::default);
    if let Some(p) = &args.out {
        output.path = Some(p.display().to_string());
    }
    if let Some(f) = args.format {
        output.format = Some(if f == Format::Json { "json" } else { "csv" }.to_string());
    }
    let format = match output.format.as_deref() {
        None | Some("json") => Format::Json,
        Some("csv") => Format::Csv,
        Some(other) => return Err(CliError::Config(format!("output.format: unknown format {other:?}"))),
    };
    Ok((output.path.clone().map(PathBuf::from), format))
}

fn execute(command: &Command) -> Result<bool, CliError> {
    let (name, args, runner) = command.parts();
    let mut cfg = ExperimentConfig::load(&args.config)?;
    let (out, format) = apply_overrides(&mut cfg, args)?;
    let exp = cfg.experiment.clone().unwrap_or_default();
    if let Some(w) = exp.workers {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let seed = exp.seed.unwrap_or(0);
    let start = Instant::now();
    let ctx = Context { cfg: &cfg, seed, budget: cfg.budget(), functionals: cfg.functional_budget() };
    let records = runner(&ctx)?;
    eprintln!("{name}: {} records in {:.2?}", records.len(), start.elapsed());
    // The echo omits the worker count so reports do not depend on it.
    let mut echo = cfg.clone();
    if let Some(e) = echo.experiment.as_mut() {
        e.workers = None;
    }
    let summary = Summary::of(&records);
    let pass = summary.pass;
    let report = Report {
        experiment: cfg.id(name),
        subcommand: name.to_string(),
        seed,
        threshold_version: THRESHOLD_VERSION,
        config: serde_json::to_value(&echo).map_err(|e| CliError::Output(e.to_string()))?,
        records,
        summary,
    };
    let text = match format {
        Format::Json => report::to_json(&report)?,
        Format::Csv => report::to_csv(&report)?,
    };
    match out {
        Some(path) => std::fs::write(&path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    eprintln!("{name}: {} verdicts, {} passed, {} failed", report.summary.verdicts, report.summary.passed, report.summary.failed);
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ CliError::Budget(_)) => {
            eprintln!("budget error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
