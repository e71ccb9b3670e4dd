//! Experiment presets, configuration handling and diagnostics behind the `nlqw` tool.

pub mod config;
pub mod experiments;
pub mod metrics;
pub mod presets;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, Check, RunSummary, Summary};
