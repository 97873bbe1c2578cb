//! Command line front end for `symperr`: configuration files, CSV
//! formats, parallel sweeps, and the acceptance and self-test suites.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod csv;
pub mod parallel;

pub use commands::{run, CliError, Output};
pub use config::{Command, ConfigError, RunConfig, Settings};
