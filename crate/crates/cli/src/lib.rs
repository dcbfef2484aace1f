//! Experiment runner: loads a cube, view CSVs or synthetic data, fits the
//! configured methods and writes metrics, traces, sparsity reports and
//! classification maps.

pub mod args;
pub mod config;
pub mod experiment;

pub use config::{ExperimentConfig, InputSource, Method};
pub use experiment::{run_experiment, sweep_dimension, MethodOutcome, SweepRow};
