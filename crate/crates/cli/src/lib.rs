//! Command-line front end: TOML instance files, solve/simulate/export
//! commands, CSV and SVG outputs, and the bundled reproduction scenarios.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod policy;

pub use commands::CliError;
