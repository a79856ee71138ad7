//! Experiment plumbing behind the `pnn` binary: configs, bundled recipes,
//! file formats and the `gen` / `train` / `predict` / `eval` commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod recipes;

pub use config::{ExperimentConfig, Overrides};
pub use error::{CliError, CliResult};
