use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tablerecon_cli::{cmd_fit, cmd_oracle, cmd_reconstruct, cmd_simulate, cmd_summarize, RunConfig, SimulationConfig};

#[derive(Parser)]
#[command(name = "tablerecon", version, about = "Reconstruct incomplete 2x2 diagnostic tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Do not print the report.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the posterior and write draws, summary and report.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Use the fixed hyperparameters of the `reduction` blocks.
        #[arg(long)]
        reduced: bool,
    },
    /// Exact posterior of the latent count for fixed hyperparameters.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
    /// Reconstructed table from an existing draws file.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        draws: PathBuf,
    },
    /// Frequentist coverage of the interval for n1 on synthetic tables.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Posterior summary of an existing draws file.
    Summarize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        draws: PathBuf,
    },
}

fn run_config(common: &Common) -> Result<RunConfig> {
    let path = common.config.as_ref().context("--config is required")?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.mcmc.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(String, bool)> {
    Ok(match cli.command {
        Command::Fit { common, reduced } => (cmd_fit(&run_config(&common)?, reduced, &common.out)?, common.quiet),
        Command::Oracle { common } => (cmd_oracle(&run_config(&common)?, &common.out)?, common.quiet),
        Command::Reconstruct { common, draws } => (cmd_reconstruct(&run_config(&common)?, &draws, &common.out)?, common.quiet),
        Command::Simulate { common } => {
            let path = common.config.as_ref().context("--config is required")?;
            let mut cfg = SimulationConfig::load(path)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            (cmd_simulate(&cfg, &common.out)?, common.quiet)
        }
        Command::Summarize { common, draws } => {
            let cfg = common.config.as_ref().map(|_| run_config(&common)).transpose()?;
            (cmd_summarize(cfg.as_ref(), &draws, &common.out)?, common.quiet)
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((report, quiet)) => {
            if !quiet {
                print!("{report}");
                if !report.ends_with('\n') {
                    println!();
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
