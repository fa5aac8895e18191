//! Workload harness for the dynamic graph index: dataset I/O, synthetic
//! data, training-query synthesis, the sliding-window protocols and metric
//! reporting.

pub mod dataset;
pub mod report;
pub mod synth;
pub mod training;
pub mod truth;
pub mod workload;

pub use workload::{run_sliding_window, OpKind, OpRecord, Protocol, RunOutput, Training, WorkloadConfig};
