//! Library side of the `fptfilter` command-line tool.

pub mod commands;
pub mod config;
pub mod csv;
pub mod error;

pub use config::{Experiment, ExperimentConfig};
pub use error::CliError;
