//! Files, statistics and command-line tooling around `gpcr-core`.

pub mod asktell;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod report;
pub mod stats;

pub use error::{CliError, CliResult};
