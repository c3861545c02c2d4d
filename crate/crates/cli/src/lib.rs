//! Command-line driver for the plaquette orbital model toolkit.
//!
//! The binary `pom` is a thin wrapper over [`run`]. Subcommands live in
//! [`commands`]; the check suite shared by `pom verify` and the acceptance
//! target lives in [`checks`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::fmt;

pub mod analyze;
pub mod args;
pub mod checks;
pub mod commands;
pub mod io;
pub mod settings;

#[derive(Debug)]
pub struct CliError(String);

impl CliError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

macro_rules! from_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self(e.to_string())
            }
        }
    )*};
}

from_error!(
    pom_core::Error,
    std::io::Error,
    csv::Error,
    serde_json::Error,
    rayon::ThreadPoolBuildError
);

/// Outcome of a subcommand: zero on success, one when a check failed.
pub type ExitCode = i32;

/// Parses `argv` (config files expanded) and runs the subcommand.
pub fn run(argv: Vec<OsString>) -> Result<ExitCode, CliError> {
    use clap::Parser;
    let expanded = settings::expand_config(argv)?;
    let cli = match args::Cli::try_parse_from(expanded) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            e.print()?;
            return Ok(code);
        }
    };
    commands::dispatch(cli)
}
