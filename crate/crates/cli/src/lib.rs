//! File formats, configuration resolution and subcommands behind the `tscf`
//! binary.

pub mod commands;
pub mod config;
pub mod exit;
pub mod files;

pub use exit::{CliError, CliResult};
