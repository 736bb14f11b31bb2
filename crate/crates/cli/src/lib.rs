//! Pipeline crate for the 6T-cell start-up reliability toolkit: run
//! configuration, file formats, parallel sweeps, calibration and the
//! subcommand implementations behind the `sepsim` binary.

// validations use `!(x > 0.0)` so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;

pub use config::RunConfig;
pub use error::{exit_code, CliError};
