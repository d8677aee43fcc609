//! `zeroshot`: train, evaluate and query sentence-tag relatedness models.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O or data
//! error, 4 non-finite loss during training, 5 gradient check failure.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{Options, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "zeroshot",
    version,
    about = "Zero-shot text categorization by sentence-tag relatedness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model on a tagged corpus and write a checkpoint
    Train {
        #[command(flatten)]
        options: Options,
    },
    /// Classify a labeled dataset through a category tree and report accuracy
    Eval {
        #[command(flatten)]
        options: Options,
    },
    /// Score one sentence against every class of a category tree
    Predict {
        #[command(flatten)]
        options: Options,
        sentence: String,
    },
    /// Compare analytic gradients with finite differences for every architecture
    Gradcheck {
        #[command(flatten)]
        options: Options,
        #[arg(long, hide = true)]
        corrupt_backward: bool,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("gradient check failed: {0}")]
    GradCheck(String),
    #[error(transparent)]
    Core(#[from] zeroshot::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use zeroshot::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::GradCheck(_) => 5,
            CliError::Core(E::NonFiniteLoss { .. }) => 4,
            CliError::Core(E::InvalidArgument(_)) => 2,
            CliError::Core(_) => 3,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { options } => commands::train_cmd(&RunConfig::resolve(&options)?),
        Command::Eval { options } => commands::eval_cmd(&RunConfig::resolve(&options)?),
        Command::Predict { options, sentence } => {
            commands::predict_cmd(&RunConfig::resolve(&options)?, &sentence)
        }
        Command::Gradcheck {
            options,
            corrupt_backward,
        } => commands::gradcheck_cmd(&RunConfig::resolve(&options)?, corrupt_backward),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
