//! Experiment harness: configuration, training runs, worst-case rate sweeps
//! and the bit-budget demonstration behind the `relgrad` binary.

pub mod config;
pub mod error;
pub mod experiment;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
