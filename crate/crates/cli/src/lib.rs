//! Command-line front end: experiment generation, certification, teleportation
//! bounds and repeater chains.

pub mod commands;
pub mod error;
pub mod formats;
pub mod grid;
pub mod spec;
pub mod sweep;

pub use error::{exit, CliError, CliResult};
