//! Command-line interface.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::run;

/// Environment variable for the default worker count.
pub const THREADS_ENV: &str = "ESPRIT_PRECODER_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "esprit-precoder",
    version,
    about = "ESPRIT-oriented precoder design and AoD benchmarks"
)]
pub struct Cli {
    /// Worker threads for sweep points and trials (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the precoder design (beampattern or eta-sweep experiment).
    Design(Common),
    /// Benchmark the three strategies (snr-sweep, aod-sweep or two-path).
    Evaluate(Common),
    /// Write beampattern magnitudes for a precoder file or the three strategies.
    Beampattern {
        #[command(flatten)]
        common: Common,
        /// Precoder CSV (as written by `design`).
        #[arg(long)]
        precoder: Option<PathBuf>,
    },
    /// Print the default configuration as JSON.
    DefaultConfig,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (JSON). Defaults to the built-in configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

impl Common {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            cfg.out_dir = dir.clone();
        }
        Ok(cfg)
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let pool = run::thread_pool(cli.threads)?;
    let written = match &cli.command {
        Command::Design(c) => run::cmd_design(&c.resolve()?, &pool)?,
        Command::Evaluate(c) => run::cmd_evaluate(&c.resolve()?, &pool)?,
        Command::Beampattern { common, precoder } => run::cmd_beampattern(&common.resolve()?, precoder.as_deref())?,
        Command::DefaultConfig => {
            println!("{}", ExperimentConfig::default().to_json());
            return Ok(());
        }
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}
