//! Experiment driver for `esprit-precoder-core`: JSON configs, CSV/JSON
//! artifacts, a parallel benchmark runner and the `esprit-precoder` CLI.

pub mod cli;
pub mod config;
pub mod output;
pub mod run;

pub use config::{Baseline, ExperimentConfig, ExperimentKind, Sweep};
