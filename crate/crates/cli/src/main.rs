//! `cutoff`: runs the equilibrium, statics, calibration and simulation
//! sweeps described by a JSON config and writes CSV/JSON tables.
//!
//! Exit codes: 0 success, 1 config error, 2 computation error (including
//! sweeps where some rows failed; those rows are still written).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use commands::Completion;
use config::RunConfig;
use output::{Format, Sink};

#[derive(Debug, Parser)]
#[command(
    name = "cutoff",
    version,
    about = "Cutoff equilibria of a reputation-driven expert"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Equilibrium cutoff and posteriors at each reputation.
    Solve,
    /// Conservatism scan, RD check and comparative-statics derivatives.
    Statics,
    /// Bonuses for target experimentation rates; optional bonus-response
    /// and gatekeeping sweeps.
    Calibrate,
    /// Monte Carlo of the solved cutoff rule with prediction checks.
    Simulate,
    /// Relative-diagnosticity report along the reputation grid.
    CheckRd,
}

impl Command {
    /// Config blocks a command cannot run without.
    fn require(self, cfg: &RunConfig) -> Result<()> {
        match self {
            Command::Calibrate if cfg.targets.is_none() => bail!("targets: required by calibrate"),
            Command::Simulate if cfg.sim.is_none() => bail!("sim: required by simulate"),
            _ => Ok(()),
        }
    }

    fn run(self, cfg: &RunConfig, sink: &Sink) -> Result<Completion> {
        match self {
            Command::Solve => commands::solve(cfg, sink),
            Command::Statics => commands::statics(cfg, sink),
            Command::Calibrate => commands::calibrate(cfg, sink),
            Command::Simulate => commands::simulate(cfg, sink),
            Command::CheckRd => commands::check_rd_cmd(cfg, sink),
        }
    }
}

fn main() -> ExitCode {
    // Usage errors are config errors; clap's own code 2 means computation
    // failure here.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let Some(path) = &cli.config else {
        eprintln!("config error: --config is required");
        return ExitCode::from(1);
    };
    let cfg = match config::load(path).and_then(|c| cli.command.require(&c).map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let result = Sink::new(&cli.out, cli.format).and_then(|sink| cli.command.run(&cfg, &sink));
    match result {
        Ok(Completion::Clean) => ExitCode::SUCCESS,
        Ok(Completion::RowFailures) => {
            eprintln!("some rows failed; see the status and error columns");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
