//! Batch experiments over generated instances, aggregation, CSV output and
//! the verifiers.

pub mod config;
pub mod experiment;
pub mod verify;

pub use config::{Check, ExperimentConfig};
pub use experiment::{
    aggregate, mean, run_experiment, sem, write_csv, AggregateReport, Experiment, FinalRow, HarnessError,
    InstanceRun,
};
