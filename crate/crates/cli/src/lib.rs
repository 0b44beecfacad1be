//! Std companion to `bcl-core`: replica batches on a thread pool, the CSV and
//! JSON file formats, and the `bcl` command-line tool.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod replicas;
pub mod selftest;

pub use error::{CliError, CliResult};
