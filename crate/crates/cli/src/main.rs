//! `tsgh` batch driver: one verb per invocation, tables written under `--out`.

mod context;
mod dates;
mod error;
mod report;
mod tables;
mod verbs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Verb {
    Simulate,
    Estimate,
    Calibrate,
    Price,
    Risk,
    Backtest,
    Sweep,
    Report,
}

#[derive(Debug, Parser)]
#[command(name = "tsgh", version, about = "Mixture return models, double calibration and AVaR backtests")]
pub struct Args {
    pub verb: Verb,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Root seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `YYYY-MM-DD`, a range `FROM:TO` (either end optional) or a comma list.
    #[arg(long)]
    pub dates: Option<String>,
    #[arg(long, value_parser = ["gaussian", "mgh", "mnts"])]
    pub model: Option<String>,
    #[arg(long, value_parser = ["historical", "double"])]
    pub estimation: Option<String>,
    #[arg(long, value_parser = ["ew", "mv", "ma"])]
    pub strategy: Option<String>,
    /// Rebalancing period in weeks, or `bh` for buy-and-hold.
    #[arg(long)]
    pub frequency: Option<String>,
    /// Directory scanned by `report`; defaults to `--out`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Silences heartbeat records.
    #[arg(short, long)]
    pub quiet: bool,
    /// Adds per-step detail to the progress stream.
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

fn emit_error(e: &CliError) {
    let record = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
    eprintln!("{record}");
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            emit_error(&CliError::Usage(e.kind().to_string()));
            return ExitCode::from(2);
        }
    };
    match verbs::run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            emit_error(&e);
            ExitCode::from(e.exit_code())
        }
    }
}
