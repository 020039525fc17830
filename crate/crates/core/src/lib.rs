//! Time-domain identification of a 13-state linear helicopter hover model.
//!
//! The crate estimates the 40 stability and control derivatives of the model
//! from flight logs by maximising the correlation between measured and
//! simulated responses. Invasive weed optimisation is the primary search;
//! a real-coded genetic algorithm and a local prediction-error minimiser
//! serve as baselines.
//!
//! Modules, bottom up:
//! - [`model`]: parameter vector, `A`/`B` realisation, RK4 simulation
//! - [`signals`]: logs, CSV, Butterworth filtering, 3-2-1-1 inputs
//! - [`fitness`]: Pearson correlation and the identification cost
//! - [`optimizers`]: IWO, GA, Nelder-Mead / prediction error
//! - [`harness`]: multi-trial experiments, confidence intervals, reports

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fitness;
pub mod harness;
pub mod model;
pub mod optimizers;
pub mod signals;

pub use error::{Error, Result};
pub use fitness::{evaluate, pearson, FitnessConfig, FitnessProblem, FitnessReport, InitialState};
pub use harness::{run_experiment, ExperimentConfig, Method, TrialReport};
pub use model::{
    build_matrices, simulate, Control, ControlInput, ModelOptions, Param, ParameterSet, State, StateVector,
    SystemMatrices, Trajectory,
};
pub use optimizers::{OptimizerResult, SearchSpace, SpaceOptions};
pub use signals::{ExcitationSpec, TimeSeriesLog};
