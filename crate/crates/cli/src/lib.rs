//! File formats, configuration and subcommands behind the `might` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use error::{CliError, CliResult};
