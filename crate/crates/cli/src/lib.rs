//! Runner for the coupled Hartree solvers: configuration, potentials,
//! subcommands and the verification suite.

// `!(x > 0.0)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod potential;
pub mod verify;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
