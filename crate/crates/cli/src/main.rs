//! `m2o`: run, attack and cost the M2O group authentication protocols.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "m2o", version, about = "Simulate and cost the HGAKA/HGA many-to-one group authentication protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run HGAKA then HGA once, write the transcript dump and check the outcome.
    Run(RunArgs),
    /// Run every threat scenario for groups of 2, 3 and 10 clients.
    Scenarios(SuiteArgs),
    /// Print the cost table as CSV.
    Costs(CostsArgs),
    /// Microbenchmark the primitives and write a timing preset.
    Calibrate(CalibrateArgs),
}

/// Settings shared with the optional config file.
#[derive(Args, Debug, Default, Clone)]
pub struct SimArgs {
    /// Random seed.
    #[arg(long, env = "M2O_SEED")]
    seed: Option<u64>,
    /// Freshness window in milliseconds.
    #[arg(long)]
    delta_t: Option<u32>,
    /// test-64, test-512 or full-3072.
    #[arg(long)]
    key_size: Option<String>,
    /// key = value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, hide = true)]
    break_replay_cache: bool,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Number of clients in the group.
    #[arg(long)]
    nc: Option<usize>,
    /// Scenario name, `honest` for a clean run.
    #[arg(long)]
    scenario: Option<String>,
    /// Transcript destination; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Args, Debug)]
pub struct SuiteArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Args, Debug)]
pub struct CostsArgs {
    /// Inclusive group-size range, `a..b` or a single value.
    #[arg(long, default_value = "2..50")]
    range: String,
    /// Built-in preset name or path to a preset file.
    #[arg(long, default_value = m2o::costmodel::FITTED_PRESET)]
    timing_preset: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 7000)]
    iterations: usize,
    #[arg(long, default_value = "full-3072")]
    key_size: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad input; maps to exit status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Scenarios(a) => commands::scenarios(a),
        Command::Costs(a) => commands::costs(a),
        Command::Calibrate(a) => commands::calibrate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<Usage>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
