//! Command-line front end of `nilmag`: scenario files in, sampled curves and
//! JSON reports out.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

pub use error::{CliError, CliResult, ExitKind};
pub use scenario::Scenario;
