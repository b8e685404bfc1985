//! Experiment harness for data re-uploading classifiers: config-driven runs,
//! architecture sweeps and decision-boundary exports.

pub mod boundary;
pub mod config;
pub mod experiment;
pub mod sweep;

pub use boundary::{boundary_grid, write_grid_csv, GridCell};
pub use config::{resolve, ExperimentConfig, MinimizerKind, Overrides};
pub use experiment::{evaluate, run_experiment, EvalReport, TrainReport};
pub use sweep::{sweep, write_sweep_csv, SweepRow};
