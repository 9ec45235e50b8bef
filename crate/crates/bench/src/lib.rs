#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Experiment runner for the unified dimensionality reduction library:
//! TOML configs, subject-wise evaluation, reports and fit timings.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod timing;

pub use config::ExperimentConfig;
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, run_experiment_with_jobs};
pub use report::{CellReport, EvalReport};
pub use timing::{run_timing, TimingReport};
