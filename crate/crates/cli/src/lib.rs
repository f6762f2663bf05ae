//! Experiment runner for the search, tour, cavity and noise modules of
//! `bqo-core`: config parsing, TSPLIB input and CSV output.

pub mod app;
pub mod config;
pub mod run;
pub mod tsplib;

pub use config::{parse_config, ConfigError, ConfigIssue, ExperimentConfig};
pub use run::{load_config, run, RunContext, RunError, RunSummary};
pub use tsplib::{parse_tsplib, TsplibError, TsplibInstance};
