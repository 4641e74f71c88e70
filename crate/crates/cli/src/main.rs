use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod augment;
mod config;
mod curate;
mod evaluate;
mod fixture;
mod overlay;

/// Background Mixup toolkit: curate backgrounds, augment datasets and
/// evaluate hand-object detectors.
#[derive(Debug, Parser)]
#[command(name = "bgmix", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a background pool from frames and detector output.
    Curate(curate::CurateArgs),
    /// Write an augmented copy of a dataset.
    Augment(augment::AugmentArgs),
    /// Score detections against ground truth.
    Evaluate(evaluate::EvaluateArgs),
    /// Draw ground truth and predictions onto images.
    Overlay(overlay::OverlayArgs),
    /// Write the bundled synthetic fixture.
    MakeFixture(fixture::FixtureArgs),
}

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing arguments (exit 2).
    Usage(String),
    /// Validation or runtime failure (exit 1).
    Run(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<bgmix_core::Error> for CliError {
    fn from(e: bgmix_core::Error) -> Self {
        CliError::Run(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match &cli.command {
        Command::Curate(a) => curate::run(a),
        Command::Augment(a) => augment::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Overlay(a) => overlay::run(a),
        Command::MakeFixture(a) => fixture::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
