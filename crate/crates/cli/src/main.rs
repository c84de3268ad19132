//! `l0conc`: experiments on concentration and amenability, written as CSV
//! tables with an optional JSON summary.

mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "l0conc",
    version,
    about = "Concentration and amenability experiments on step-map groups"
)]
struct Cli {
    /// File of `key = value` lines applied as flags before the command line.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact concentration function of a small mm-space.
    #[command(args_override_self = true)]
    Alpha(commands::AlphaArgs),
    /// Deviation of a Lipschitz function on a Hamming product from its median.
    #[command(args_override_self = true)]
    Profile(commands::ProfileArgs),
    /// Invariance defects of Følner boxes or word-metric balls.
    #[command(args_override_self = true)]
    Defect(commands::DefectArgs),
    /// Push-forward schedule on step maps with defect and concentration reports.
    #[command(args_override_self = true)]
    Amplify(commands::AmplifyArgs),
    /// Identities of the averaging operator on random cases.
    #[command(args_override_self = true)]
    PhiCheck(commands::PhiCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact when the product is small enough, sampled otherwise.
    Auto,
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    #[arg(long, default_value_t = l0conc::rng::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    pub mode: Mode,
    /// CSV destination; standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub json_summary: Option<PathBuf>,
}

/// Result of one subcommand: CSV text, the resolved configuration and the
/// outcome of every checked bound.
pub struct Outcome {
    pub csv: String,
    pub config: serde_json::Value,
    pub checks: Vec<(String, bool)>,
    pub details: serde_json::Value,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<l0conc::Error> for Failure {
    fn from(e: l0conc::Error) -> Self {
        if e.is_computation() {
            Failure::Compute(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn write_outputs(common: &Common, command: &str, outcome: Outcome) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Usage(format!("cannot write output: {e}"));
    match &common.out {
        Some(path) => fs::write(path, &outcome.csv).map_err(io)?,
        None => std::io::stdout().write_all(outcome.csv.as_bytes()).map_err(io)?,
    }
    if let Some(path) = &common.json_summary {
        let checks: serde_json::Map<String, serde_json::Value> = outcome
            .checks
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::Bool(*v)))
            .collect();
        let summary = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": outcome.config,
            "checks": checks,
            "passed": outcome.checks.iter().all(|(_, ok)| *ok),
            "details": outcome.details,
        });
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        fs::write(path, text + "\n").map_err(io)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (name, common, outcome) = match cli.command {
        Command::Alpha(a) => ("alpha", a.common.clone(), commands::alpha(&a)?),
        Command::Profile(a) => ("profile", a.common.clone(), commands::profile(&a)?),
        Command::Defect(a) => ("defect", a.common.clone(), commands::defect(&a)?),
        Command::Amplify(a) => ("amplify", a.common.clone(), commands::amplify(&a)?),
        Command::PhiCheck(a) => ("phi-check", a.common.clone(), commands::phi_check(&a)?),
    };
    write_outputs(&common, name, outcome)
}

fn main() -> ExitCode {
    let argv = match config::expand_config(std::env::args_os().collect()) {
        Ok(argv) => argv,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("computation failed: {msg}");
            ExitCode::from(2)
        }
    }
}
