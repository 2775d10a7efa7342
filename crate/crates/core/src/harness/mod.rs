//! Seeded Monte Carlo experiments over the recovery methods.

pub mod config;
pub mod report;
pub mod trial;

pub use config::{load_config, parse_config, ExperimentConfig, Method, OutputFormat, Preset};
pub use report::{
    aggregate, emit_report, run_monte_carlo, run_trials, AggregateReport, MethodAggregate, RatioReport,
};
pub use trial::{run_trial, run_trial_with, TraceRow, TrialOptions, TrialResult, TrialSeeds};
