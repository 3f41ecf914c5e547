//! Library side of the `symdec` command line: configuration, run manifests
//! and subcommand implementations.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use error::{CliError, Result};
