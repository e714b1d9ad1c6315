//! Batch frontend for hierarchical Bayesian somatic-mutation analysis:
//! simulate studies, fit the rate and driver models, compute frequentist
//! baselines, and evaluate FDR calibration against planted truth.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mutbayes_core::error::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "mutbayes",
    version,
    about = "Hierarchical Bayesian mutation-rate and driver-probability estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the per-gene mutation-rate model and write ranked rate summaries.
    FitRates(FitArgs),
    /// Fit the driver model; writes driver probabilities and the genome
    /// summary. Requires the passenger rate lambda0.
    FitDrivers(FitArgs),
    /// Generate a synthetic study with planted drivers and ground truth.
    Simulate(SimulateArgs),
    /// Compare fitted driver probabilities and LRT/BH baselines against
    /// planted truth (FDR curves and a calibration report).
    Evaluate(EvaluateArgs),
    /// Per-gene MLE, Poisson LRT p-values and BH adjustment.
    Baseline(BaselineArgs),
}

#[derive(Args)]
pub struct FitArgs {
    /// Counts TSV: gene, type, sample, count.
    #[arg(long)]
    pub counts: PathBuf,
    /// Coverage TSV: per-sample or broadcast form.
    #[arg(long)]
    pub coverage: PathBuf,
    /// Type catalogue, one label per line (default: built-in 25 types).
    #[arg(long)]
    pub types: Option<PathBuf>,
    /// key=value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Root seed (overrides the config file's seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Passenger per-base rate (overrides the config file's lambda0).
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Independent seeded chains run concurrently.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Comma-separated genes to score for a mutation in a new sample.
    #[arg(long)]
    pub predict: Option<String>,
    /// Total coverage of the hypothetical new sample for --predict genes.
    #[arg(long)]
    pub predict_coverage: Option<f64>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gene count before any desk scaling (default: 20671).
    #[arg(long)]
    pub genes: Option<usize>,
    /// Stratified subsample to this many genes, preserving tier fractions.
    #[arg(long)]
    pub target_g: Option<usize>,
    /// Sample count (default: 24).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Passenger per-base rate (default: 3.68e-7).
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Driver tiers as fraction:multiplier, comma-separated
    /// (default: 0.02:10,0.01:30,0.0005:200).
    #[arg(long)]
    pub tiers: Option<String>,
    /// Reuse gene coverage from an existing coverage TSV.
    #[arg(long)]
    pub coverage_from: Option<PathBuf>,
    /// Type catalogue for --coverage-from.
    #[arg(long)]
    pub types: Option<PathBuf>,
    /// Median synthetic gene length in bases (default: 1500).
    #[arg(long)]
    pub median_length: Option<f64>,
    /// Log-scale spread of synthetic gene lengths (default: 0.7).
    #[arg(long)]
    pub sigma_log: Option<f64>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// driver_summary.tsv from fit-drivers.
    #[arg(long)]
    pub summary: PathBuf,
    /// truth.tsv from simulate.
    #[arg(long)]
    pub truth: PathBuf,
    /// baseline.tsv from the baseline command.
    #[arg(long)]
    pub baseline: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// List-size cap for the calibration report.
    #[arg(long, default_value_t = 200)]
    pub max_k: usize,
}

#[derive(Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long)]
    pub coverage: PathBuf,
    #[arg(long)]
    pub types: Option<PathBuf>,
    /// Passenger per-base rate for the null hypothesis.
    #[arg(long)]
    pub lambda0: f64,
    /// Effects table (kind, label, value); defaults to unit effects.
    #[arg(long)]
    pub effects: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => EXIT_USAGE,
        Error::Parse { .. } | Error::Validation(_) | Error::Io { .. } => EXIT_DATA,
        Error::Numerical { .. } => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::FitRates(args) => commands::cmd_fit_rates(args),
        Command::FitDrivers(args) => commands::cmd_fit_drivers(args),
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Evaluate(args) => commands::cmd_evaluate(args),
        Command::Baseline(args) => commands::cmd_baseline(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
