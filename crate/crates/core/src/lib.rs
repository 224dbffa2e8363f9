//! Hybrid linear solver for finite-difference heat problems.
//!
//! The 2D steady heat equation is discretised with the five-point stencil
//! ([`grid`]), split into diagonal blocks and iterated with block
//! Gauss-Seidel ([`solver`]). Each block solve can be exact, or encoded as a
//! QUBO over fixed-point bits ([`encoding`]) and handed to a sampler backend
//! ([`sampler`]) that stands in for a quantum annealer. [`reference`] holds
//! the classical baselines used to measure errors.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod encoding;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod reference;
pub mod sampler;
pub mod solver;

pub use encoding::{
    decode, encode, estimate_resources, inverse_index, logical_index, required_bits, BinaryEncoding, QuboProblem,
    ResourceReport,
};
pub use error::{Error, Result};
pub use grid::{
    assemble_system, boundary_temperature, grid_to_field, Boundary, Edge, EdgeProfile, HeatProblem, TemperatureField,
};
pub use linalg::{LinearSystem, SparseMatrix};
pub use reference::{classical_gauss_seidel, condition_number, direct_solve, ConditionEstimate};
pub use sampler::{solve_exhaustive, solve_sa, Sample, SampleSet, Sampler, SamplerParams};
pub use solver::{
    check_convergence_condition, gs_sweep, iterate, iterate_from, partition, relative_error, residual, shrink_encoding,
    Backend, BlockPartition, IterationRecord, IterationTrace, SolveConfig,
};
