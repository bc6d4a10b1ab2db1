//! Command-line front end: single runs, sensitivity grids, and method
//! comparisons over the aesad engine.

mod commands;
mod config;
mod manifest;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "aesad",
    version,
    about = "Semi-supervised anomaly detection with targeted-reconstruction autoencoders"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing, contents overwritten.
    #[arg(long)]
    out: PathBuf,
    /// Override [train].seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for grid cells and batch math (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write model.bin, metrics.csv, manifest.toml.
    Train(CommonArgs),
    /// Score a dataset with a saved model and report AUC.
    Evaluate(EvaluateArgs),
    /// Run the (s x alpha x seed) sensitivity grid.
    Grid(CommonArgs),
    /// Train every configured method on identical splits and tabulate wins.
    Compare(CommonArgs),
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Model file written by `aesad train`.
    #[arg(long)]
    model: PathBuf,
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Train(c) | Command::Grid(c) | Command::Compare(c) => c,
        Command::Evaluate(e) => &e.common,
    };
    if let Some(workers) = common.workers {
        if workers > 0 {
            // Ignore the error when a pool already exists (e.g. in tests).
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build_global();
        }
    }
    let cfg = config::load(&common.config, common.seed)?;
    match &cli.command {
        Command::Train(c) => commands::cmd_train(&cfg, &c.out),
        Command::Evaluate(e) => commands::cmd_evaluate(&cfg, &e.model, &e.common.out),
        Command::Grid(c) => commands::cmd_grid(&cfg, &c.out),
        Command::Compare(c) => commands::cmd_compare(&cfg, &c.out),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
