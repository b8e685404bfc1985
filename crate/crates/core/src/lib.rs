//! Data re-uploading quantum classifiers.
//!
//! A classical input `x` is loaded into a qubit register repeatedly, once per
//! layer, through rotations `U(θ + w∘x)` whose angles and weights are trained
//! classically. The crate provides an exact statevector simulator for up to a
//! few qubits, the circuits themselves, fidelity-based cost functions with
//! three independent gradient routes, L-BFGS and mini-batch SGD, and seeded
//! generators for the benchmark problems.

pub mod circuit;
pub mod error;
pub mod grad;
pub mod model;
pub mod objective;
pub mod optimize;
pub mod problems;
pub mod qmath;
pub mod rng;
pub mod train;

pub use circuit::{CircuitSpec, DataPoint, ModelParams, ParamCount};
pub use error::{Error, Result};
pub use model::{success_rate, Model};
pub use objective::{CostKind, LabelSet, ObjectiveConfig, Strategy};
pub use problems::{Dataset, ProblemId};
pub use train::{train, GradMethod, Minimizer, TrainOutcome};
