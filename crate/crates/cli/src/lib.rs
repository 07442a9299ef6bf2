//! Command-line harness: config loading, the five verbs, and output files.

pub mod config;
pub mod output;
pub mod suite;

pub use config::{ConfigError, ExperimentConfig, Kind};
pub use output::write_outputs;
pub use suite::{run, run_with_replay, Persisted, SuiteResult};
