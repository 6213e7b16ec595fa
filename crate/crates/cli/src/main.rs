use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// W-state preparation, tomography and entanglement analysis.
#[derive(Debug, Parser)]
#[command(name = "wstate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the preparation sequence and write the qubit density matrix.
    Prepare(PrepareArgs),
    /// Sample a full Pauli dataset from a state and reconstruct it by MLE.
    Tomography(TomographyArgs),
    /// Entanglement report and |rho| plot data for a density matrix.
    Analyze(AnalyzeArgs),
    /// Projection-noise error bars by resampling and re-reconstruction.
    McErrors(McErrorsArgs),
    /// Recompute the biseparable bound gamma for the published witnesses.
    WitnessGamma(WitnessGammaArgs),
}

#[derive(Debug, Args)]
struct MleArgs {
    #[arg(long = "mle-max-iter", default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
    max_iter: u64,
    #[arg(long = "mle-tol", default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug, Args)]
struct PrepareArgs {
    /// Number of ions; may instead come from the noise file.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=12))]
    n: Option<u64>,
    /// Noise configuration (key = value); omit for the ideal sequence.
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Trajectories for the noisy simulation [default: from the noise file, else 200].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
    /// Master seed [default: from the noise file, else 0].
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TomographyArgs {
    /// Density matrix to sample from.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    mle: MleArgs,
    /// Reconstructed density matrix.
    #[arg(long)]
    out: PathBuf,
    /// Dataset file [default: OUT with extension .dataset.txt].
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Report file.
    #[arg(long)]
    out: PathBuf,
    /// Plot data file [default: OUT with extension .plot.txt].
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct McErrorsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    /// Resampled datasets, at least 2.
    #[arg(long, default_value_t = 100, value_parser = at_least_two)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    mle: MleArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct WitnessGammaArgs {
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn at_least_two(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(t) if t >= 2 => Ok(t),
        Ok(t) => Err(format!(
            "need at least 2 trials for a standard deviation, got {t}"
        )),
        Err(e) => Err(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prepare(a) => commands::prepare(a),
        Command::Tomography(a) => commands::tomography(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::McErrors(a) => commands::mc_errors(a),
        Command::WitnessGamma(a) => commands::witness_gamma(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
