//! `calibrate`: one-off scoring, property verification, simulation and deck tools.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O or
//! data error.

mod deck;
mod score;
mod simulate;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Some verified property did not hold.
    Verification(String),
    Usage(String),
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

pub type CliResult = Result<(), CliError>;

/// Writes `value` as pretty JSON to `path`.
pub fn write_json(path: &std::path::Path, value: &impl serde::Serialize) -> CliResult {
    let body = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, body + "\n").map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

#[derive(Debug, Parser)]
#[command(name = "calibrate", version, about = "Scoring rules and calibration training tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score one choice prediction with the practical log rule.
    ScoreChoice(score::ChoiceArgs),
    /// Score one interval prediction.
    ScoreInterval(score::IntervalArgs),
    /// Check scoring-rule properties numerically.
    Verify(verify::VerifyArgs),
    /// Run a simulated forecaster through a deck.
    Simulate(simulate::SimulateArgs),
    /// Validate or import decks.
    Deck {
        #[command(subcommand)]
        action: DeckAction,
    },
}

#[derive(Debug, Subcommand)]
enum DeckAction {
    /// Check a deck file and print per-question diagnostics.
    Validate { path: PathBuf },
    /// Validate a deck and copy it into the server's deck directory.
    Import {
        path: PathBuf,
        /// Destination deck directory.
        #[arg(long, env = "CALIBRATE_DECKS", default_value = "decks")]
        decks: PathBuf,
        /// Replace an existing deck with the same id.
        #[arg(long)]
        force: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ScoreChoice(args) => score::choice(&args),
        Command::ScoreInterval(args) => score::interval(&args),
        Command::Verify(args) => verify::run(&args),
        Command::Simulate(args) => simulate::run(&args),
        Command::Deck { action: DeckAction::Validate { path } } => deck::validate(&path),
        Command::Deck { action: DeckAction::Import { path, decks, force } } => deck::import(&path, &decks, force),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Verification(msg) => eprintln!("verification failed: {msg}"),
                CliError::Usage(msg) | CliError::Data(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
