//! `biphoton`: phase-matching scans, time-tag simulation and correlation
//! analysis from the command line. Every command prints a JSON summary on
//! stdout that embeds the fully resolved configuration.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::analyze::{AnalyzeArgs, InputArgs, TableArgs};
use crate::commands::phasematch::PhasematchArgs;
use crate::commands::simulate::SimulateArgs;
use crate::config::FileConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "biphoton", version, about = "Heralded bi-photon source toolkit")]
struct Cli {
    /// Worker threads for simulation and analysis (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML or JSON (by extension) run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Phase-matching factor versus signal angle and pump detuning.
    Phasematch(PhasematchArgs),
    /// Generate a time-tag file from a source model.
    Simulate(SimulateArgs),
    /// Signal-idler cross-correlation histogram.
    G2(TableArgs),
    /// Heralding efficiency.
    Herald(InputArgs),
    /// Heralded auto-correlation g2c(0).
    Autocorr(InputArgs),
    /// Two-source HOM coincidence profile and visibility.
    Hom(TableArgs),
    /// Several analyses of one file in a single report.
    Analyze(AnalyzeArgs),
    /// Built-in consistency checks.
    Selftest,
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot start {n} workers: {e}")))?;
    }
    match &cli.command {
        Command::Phasematch(a) => commands::phasematch::run(a, &file),
        Command::Simulate(a) => commands::simulate::run(a, &file),
        Command::G2(a) => commands::analyze::g2(a, &file),
        Command::Herald(a) => commands::analyze::herald(a, &file),
        Command::Autocorr(a) => commands::analyze::autocorr(a, &file),
        Command::Hom(a) => commands::analyze::hom(a, &file),
        Command::Analyze(a) => commands::analyze::analyze(a, &file),
        Command::Selftest => commands::selftest::run(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("biphoton: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
