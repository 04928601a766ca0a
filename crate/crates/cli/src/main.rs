//! `hbsge`: rerun the benchmark grid, single runs, stability tables and gradient checks.
//!
//! Exit codes: 0 success, 1 runtime or check failure, 2 usage error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "hbsge", version, about = "HB-SGE optimizer benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a benchmark suite and write summary tables and traces.
    Bench(BenchArgs),
    /// Run one optimizer on one problem and print its trace.
    Run(RunArgs),
    /// Per-eigenmode stability table for every configuration on a quadratic spectrum.
    Stability(StabilityArgs),
    /// Compare analytic gradients with central finite differences.
    Gradcheck(GradcheckArgs),
    /// Largest grid learning rate at which plain gradient descent converges.
    Tune(TuneArgs),
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Suite file (flat `key = value`).
    pub config: Option<PathBuf>,
    /// Use the published grid: four quadratics, Rosenbrock, Beale, six optimizers.
    #[arg(long)]
    pub paper_grid: bool,
    /// Comma-separated seeds; overrides the suite file.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Output directory; overrides the suite file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    /// quad, rosenbrock or beale.
    #[arg(long)]
    pub problem: String,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
    /// Seed for the quadratic instance and its starting point.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// sgd, momentum, nag, adam or hbsge.
    #[arg(long)]
    pub opt: String,
    /// Learning rate (defaults to the published value for the problem).
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = hbsge_core::optimizers::DEFAULT_ALPHA_MAX)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = hbsge_core::optimizers::DEFAULT_TAU)]
    pub tau: f64,
    /// Iteration budget (default 1000 for quadratics, 5000 otherwise).
    #[arg(long)]
    pub max_iters: Option<u64>,
    /// Write the trace here instead of stdout.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    #[arg(long)]
    pub kappa: f64,
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
    #[arg(long)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.9)]
    pub beta: f64,
    /// Extrapolation coefficient at which HB-SGE is linearized.
    #[arg(long, default_value_t = hbsge_core::optimizers::DEFAULT_ALPHA_MAX)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated grid (default 0.1,0.05,0.01,0.005,0.001).
    #[arg(long)]
    pub grid: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bench(a) => commands::bench(a),
        Command::Run(a) => commands::run(a),
        Command::Stability(a) => commands::stability(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
        Command::Tune(a) => commands::tune(a),
    };
    match outcome {
        Ok(code) => code,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
