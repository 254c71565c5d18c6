//! File formats, configuration and subcommands behind the `decon` binary.

pub mod app;
pub mod config;
pub mod error;
pub mod formats;
pub mod problem_file;
pub mod trace_csv;

pub use error::{Error, Result};
