//! Configuration-driven experiment runner for the `qaheat` solver.

pub mod config;
pub mod error;
pub mod render;
pub mod run;

pub use config::{ExperimentConfig, Overrides, OUT_DIR_ENV};
pub use error::HarnessError;
pub use run::{run_solve, run_sweep, SolveReport, SweepReport};
