//! File formats, experiment harness and command-line front end for `bdt-core`.

pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;

pub use error::{CliError, Result};
