//! File-level front end of the simulator: configuration loading, run and
//! comparison orchestration, and the CSV/JSON output bundle.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_compare, cmd_run, cmd_validate, CliError};
pub use config::{load_config, resolve, ResolvedConfig};
