//! Experiment runner: configuration, orchestration of the `matchlab-core`
//! studies and CSV/JSON emission.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ConfigError, Experiment, ExperimentConfig, PartialConfig};
pub use experiments::{execute, run, Outcome, RunError};
pub use output::{Assertion, ResultRow, RowKind, Summary, Table};
