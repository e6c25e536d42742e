//! File formats, parallel drivers and the command-line front end for
//! `coxfuse-core`.
//!
//! - [`io`]: region, covariate and edge CSV files.
//! - [`dto`]: JSON documents for fits, inference, grids, predictions and
//!   scenarios.
//! - [`manifest`]: the per-run manifest.
//! - [`standardize`]: opt-in covariate standardization.
//! - [`drivers`]: thread-parallel tuning and simulation benchmarks.
//! - [`cli`]: argument parsing and the subcommands.

pub mod cli;
pub mod drivers;
pub mod dto;
pub mod error;
pub mod io;
pub mod manifest;
pub mod standardize;

pub use error::CliError;
