//! Experiment driver for PGD scheduling: config files, subcommands and
//! tabular outputs on top of `pgd-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod stats;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use output::{Outputs, Table};
