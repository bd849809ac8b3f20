//! Library half of the `minpoly` binary: configuration, file formats, the
//! result bundle, the benchmark harness, and the command implementations.
//! Integration and acceptance tests drive these directly; `main.rs` only
//! parses arguments and maps errors to exit codes.

pub mod bench;
pub mod bundle;
pub mod commands;
pub mod config;
pub mod formats;

pub use commands::CliError;
pub use config::RunConfig;
