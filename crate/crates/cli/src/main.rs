//! `sttcl` — synthetic data generation, feature extraction, training,
//! evaluation, and log export for the spatial-temporal transformer with
//! curriculum learning.
//!
//! Exit codes: 0 success, 1 usage, 2 validation or I/O, 3 numeric
//! failure.

mod commands;
mod manifest;
mod settings;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use sttcl::Error;

#[derive(Parser)]
#[command(name = "sttcl", version, about = "EEG emotion recognition with a spatial-temporal transformer and curriculum learning")]
struct Cli {
    /// Plain-text key=value configuration file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic multichannel recordings with class-specific
    /// band-power signatures and per-trial intensity.
    Synth(commands::SynthArgs),
    /// Turn raw recordings (EEGR or CSV) into a SEGB feature dataset.
    Preprocess(commands::PreprocessArgs),
    /// Train with 5-fold cross-trial validation; writes checkpoints,
    /// logs, and a report.
    Train(commands::TrainArgs),
    /// Evaluate a checkpoint against a SEGB dataset.
    Evaluate(commands::EvaluateArgs),
    /// Flatten run logs into tidy CSV for external plotting.
    PlotData(commands::PlotDataArgs),
    /// Print the headers of EEGR/SEGB/STTC files.
    Inspect(commands::InspectArgs),
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numeric(_) => 3,
        _ => 2,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let settings = match settings::Settings::load(cli.config.as_deref()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    };

    let result = match cli.command {
        Command::Synth(args) => commands::synth(args, &settings),
        Command::Preprocess(args) => commands::preprocess(args, &settings),
        Command::Train(args) => commands::train(args, &settings),
        Command::Evaluate(args) => commands::evaluate(args, &settings),
        Command::PlotData(args) => commands::plot_data(args),
        Command::Inspect(args) => commands::inspect(args),
    };

    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
