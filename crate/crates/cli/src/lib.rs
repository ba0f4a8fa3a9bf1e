//! Command-line front end for `delaystab`: JSON scenario files, runs,
//! parameter sweeps, and deterministic CSV/JSON outputs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
mod error;
pub mod run;
pub mod sweep;

pub use commands::run_cli;
pub use config::ScenarioConfig;
pub use error::CliError;
