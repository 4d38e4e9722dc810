//! `xhaul`: generate synthetic link-attenuation traces, train and evaluate
//! attenuation predictors, and simulate predictive network reconfiguration.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad flags or
//! malformed inputs), 2 on runtime failures.

mod commands;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "xhaul", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a trace CSV from a scenario descriptor.
    Generate(GenerateArgs),
    /// Train the recurrent attenuation predictor on a trace.
    Train(TrainArgs),
    /// Run a trained model over a trace and report prediction metrics.
    Predict(PredictArgs),
    /// Simulate a reconfiguration algorithm over a scenario.
    Simulate(SimulateArgs),
    /// Compute metric reports from prediction or simulation files.
    Report(ReportArgs),
    /// Run the built-in sanity checks and print one line per check.
    Selftest,
}

#[derive(Args)]
struct GenerateArgs {
    /// Scenario descriptor (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Override the descriptor's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Trace CSV with the training series.
    #[arg(long)]
    trace: PathBuf,
    /// Topology file fixing the link order.
    #[arg(long)]
    topology: PathBuf,
    /// Input window length.
    #[arg(long, default_value_t = 12)]
    window: usize,
    /// Prediction window length.
    #[arg(long, default_value_t = 5)]
    horizon: usize,
    /// Hidden units per recurrent layer.
    #[arg(long, default_value_t = 128)]
    hidden: usize,
    /// Maximum training epochs.
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint path to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Trace CSV to predict over.
    #[arg(long)]
    trace: PathBuf,
    /// Topology file fixing the link order.
    #[arg(long)]
    topology: PathBuf,
    /// Output directory (predictions.csv and prediction-metrics.csv).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario descriptor (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Reconfiguration policy.
    #[arg(long, value_parser = ["msnr", "never", "always"])]
    algorithm: String,
    /// Predictor: lstm, naive, ar, or oracle:SIGMA2.
    #[arg(long, default_value = "oracle:0")]
    predictor: String,
    /// Model checkpoint (required with --predictor lstm).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Autoregressive baseline order (with --predictor ar).
    #[arg(long, default_value_t = 3)]
    ar_order: usize,
    /// Prediction window length.
    #[arg(long, default_value_t = 5)]
    horizon: usize,
    /// History window kept for the predictor.
    #[arg(long, default_value_t = 12)]
    window: usize,
    /// Scratch-capacity threshold for re-routing.
    #[arg(long, default_value_t = 0.05)]
    smin: f64,
    /// Let the never-re-route policy use accidental scratch.
    #[arg(long, default_value_t = false)]
    opportunistic: bool,
    /// Clamp the number of simulated steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Seed for predictor noise streams.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory (simulation-<algorithm>.csv).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Predictions CSV (from `predict`); requires --trace and --topology.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Trace CSV with the true values.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Topology file fixing the link order.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Candidate simulation trace (gain numerator).
    #[arg(long)]
    candidate: Option<PathBuf>,
    /// Reference simulation trace (gain denominator).
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; everything else is a
            // validation failure.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Train(args) => commands::train(args),
        Command::Predict(args) => commands::predict(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Report(args) => commands::report(args),
        Command::Selftest => commands::selftest(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Validation(message)) => {
            eprintln!("error: {}", message);
            ExitCode::from(1)
        }
        Err(commands::CliError::Runtime(error)) => {
            eprintln!("error: {:#}", error);
            ExitCode::from(2)
        }
    }
}
