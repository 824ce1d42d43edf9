//! Benchmark harness: experiment configuration, runners, and the record
//! format they share.
//!
//! [`config`] resolves an experiment description from defaults, a config
//! file, and overrides. [`runner`] executes it and returns per-layer
//! [`report::Record`]s. [`report`] serializes records as CSV behind a
//! commented preamble of the resolved configuration and aggregates them
//! into per-engine summaries with norm-trajectory checks.
//!
//! Replaying a configuration reproduces every record byte for byte except
//! the wall-time column.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{Engine, EngineChoice, Family, RunConfig};
pub use report::{read_records, report_summary, summarize, write_records, Record, Summary};
pub use runner::{
    available_threads, convergence_step_means, qft_bench, run_experiment, scaling_probe,
    ExperimentOutput, QftBenchConfig, QftBenchOutput, QftSizeReport, ScalingConfig,
    ScalingOutput, SizeTiming,
};
