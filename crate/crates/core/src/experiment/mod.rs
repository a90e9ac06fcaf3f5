//! Experiment files, runs persisted to disk, and reports over finished runs.

mod config;
pub mod json;
mod report;
mod run;
mod sweep;

pub use config::{parse_config, DatasetConfig, ExperimentConfig, SchedulerConfig, ShiftConfig, TierConfig};
pub use report::{compare, plot_data, Comparison, ComparisonRow};
pub use run::{
    execute, load_dataset, prepare_partitions, read_round_log, read_summary, run_to_dir, write_atomic, CommTotals, ExperimentResult,
    RunOptions, RuntimeStats, REPORT, ROUND_LOG, RUNTIME, SUMMARY,
};
pub use sweep::{expand, write_sweep, SweepAxis};
