//! File formats, configuration and the command-line driver for
//! `survbal-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod io;
pub mod manifest;
pub mod prepare;

pub use cli::run_cli;
pub use error::{CliError, CliResult};
