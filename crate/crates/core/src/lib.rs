//! Wheel loader short loading cycle with a rule-based operator.

pub mod config;
pub mod environment;
pub mod error;
pub mod kernel;
pub mod machine;
pub mod operator;
pub mod sim;

pub use config::{RunConfig, SimConfig};
pub use sim::{run_cycle, CycleLog, CycleRun, LogRow, Metrics, RunError};
