//! Experiment driver: uncontrolled simulations, offline reduction, online
//! tree-structure control and reporting.

pub mod commands;
pub mod config;
pub mod error;
pub mod setup;

pub use config::ExperimentConfig;
pub use error::{Category, CliError, CliResult};
