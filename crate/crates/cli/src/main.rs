//! `bohmflow`: runs simulations, diagnostics, trajectory and tight-binding
//! experiments from a TOML configuration and writes the results to a directory.

mod commands;
mod error;
mod export;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "bohmflow", version, about = "1D wave-packet simulator with a Bohmian layer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate and export frames with their Bohmian fields (NDJSON).
    Simulate(Common),
    /// Propagate and write a diagnostics report for every stored frame (JSON).
    Diagnose(Common),
    /// Sample and integrate a trajectory ensemble (CSV).
    Trajectories(Common),
    /// Run the barrier tunneling experiment (JSON report and CSV ensemble).
    Tunnel(Common),
    /// Sweep the tight-binding Green's function over energies (CSV).
    Negf(Common),
    /// Run the identity suite; exits with status 4 if any check fails.
    Verify(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Configuration file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the configuration seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured number of trajectories.
    #[arg(long = "n-traj")]
    pub n_traj: Option<usize>,
    #[arg(long = "tolerance-profile", value_enum, default_value_t = Profile::Default)]
    pub tolerance_profile: Profile,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Default,
    Strict,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("BOHMFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("BOHMFLOW_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(c) => commands::simulate(&c),
        Command::Diagnose(c) => commands::diagnose(&c),
        Command::Trajectories(c) => commands::trajectories(&c),
        Command::Tunnel(c) => commands::tunnel(&c),
        Command::Negf(c) => commands::negf(&c),
        Command::Verify(c) => commands::verify(&c),
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
