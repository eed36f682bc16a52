//! `tempsal`: evaluate saliency predictions, train and run the temporal
//! adaptation layers, render score tables, generate synthetic data.

mod config;
mod evaluate;
mod generate;
mod predict;
mod report;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use tempsal_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "tempsal", version, about = "Temporal saliency adaptation and gaze metrics")]
struct Cli {
    /// JSON file with settings for the subcommand; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel evaluation and prediction (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score predicted maps against a manifest's fixations and ground truth.
    Evaluate(evaluate::EvaluateArgs),
    /// Train a conv or convlstm adaptation model on a manifest.
    Train(train::TrainArgs),
    /// Refine every static map of a manifest with a trained checkpoint.
    Predict(predict::PredictArgs),
    /// Render tables from one or more score files.
    Report(report::ReportArgs),
    /// Write a synthetic drifting-blob dataset.
    Generate(generate::GenerateArgs),
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Evaluate(a) => evaluate::run(config::merge(&a, cfg)?),
        Command::Train(a) => train::run(config::merge(&a, cfg)?),
        Command::Predict(a) => predict::run(config::merge(&a, cfg)?),
        Command::Report(a) => report::run(config::merge(&a, cfg)?),
        Command::Generate(a) => generate::run(config::merge(&a, cfg)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let msg = msg.trim_start_matches("error: ").trim_end();
            eprintln!("ERROR UsageError: {msg}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR {}: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
