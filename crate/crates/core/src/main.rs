//! Command-line front end: `run`, `sweep`, `spectral` and `linkbudget`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dfedsat::experiment::{config_spectrum, run_to_dir, sweep, write_sweep, SweepGrid};
use dfedsat::linkmodel::link_report;
use dfedsat::{Error, ExperimentConfig};

#[derive(Parser)]
#[command(name = "dfedsat", version, about = "Decentralized federated learning over LEO constellations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every cell of a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the spectral summary of the consensus operator.
    Spectral {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the link budget at a given distance.
    Linkbudget {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "distance-m")]
        distance_m: f64,
    },
}

fn execute(cli: Cli) -> dfedsat::Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let metrics = run_to_dir(&cfg, &out)?;
            eprintln!("{} rounds written to {}", metrics.len(), out.display());
        }
        Command::Sweep { config, grid, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let grid = SweepGrid::load(&grid)?;
            let outcomes = sweep(&cfg, &grid)?;
            write_sweep(&outcomes, &out)?;
            eprintln!("{} cells written to {}", outcomes.len(), out.display());
        }
        Command::Spectral { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!("{}", serde_json::to_string(&config_spectrum(&cfg)?)?);
        }
        Command::Linkbudget { config, distance_m } => {
            let cfg = ExperimentConfig::load(&config)?;
            if !(distance_m > 0.0 && distance_m.is_finite()) {
                return Err(Error::Config(format!("distance must be positive, got {distance_m}")));
            }
            let report = link_report(&cfg.link.to_params()?, distance_m)?;
            println!("{}", serde_json::to_string(&report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_)
                | Error::InvalidArgument(_)
                | Error::Dimension(_)
                | Error::UnknownSatellite { .. } => 2,
                Error::NumericBlowUp { .. } | Error::NoConvergence(_) => 3,
                Error::Io(_) => 1,
            })
        }
    }
}
