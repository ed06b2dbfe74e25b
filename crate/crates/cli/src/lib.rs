//! Command-line front end for `sflow-core`: problem files, JSON reports,
//! CSV plot tables and the fixture battery.

pub mod battery;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod run;

pub use config::{Overrides, Problem, ProblemConfig};
pub use error::CliError;
pub use report::{Report, Sections, SpectralFlow};
pub use run::{main_with_args, Cli, Command};
