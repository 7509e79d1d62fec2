//! Batch front-end for `frachs-core`: experiment configs, runs and reports.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{Run, Status};
pub use config::{ConfigError, ExperimentConfig};
pub use report::{export, Format, RunReport};
