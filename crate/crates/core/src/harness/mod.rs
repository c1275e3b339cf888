//! Experiment runner, trace and summary output, and the verification sweep.

mod config;
mod runner;
mod stats;
mod trace;
mod verify;

pub use config::{ExperimentConfig, DEFAULT_TRACE_EVERY};
pub use runner::{
    child_seed, checkpoints_for, run_experiment, run_replicate, Aggregate, CaseCounts, Checkpoint,
    CheckpointQuartiles, ReplicateSummary, RunSummary,
};
pub use stats::Quartiles;
pub use trace::{format_float, trace_header, trace_row};
pub use verify::{
    check_sample, sample_outside_point, verify_geometry, SampleDeviations, Thresholds,
    VerificationReport,
};
