//! Recovery of a shared low-rank component and a study-specific sparse
//! component from a matrix of association summary statistics.
//!
//! The decomposition solves
//!
//! ```text
//! min_{X,E}  ½‖D − X − E‖_F² + α‖X‖_* + β‖E‖_1
//! ```
//!
//! by alternating singular value thresholding (the X-step) with elementwise
//! soft-thresholding (the E-step). Around the solver sit a synthetic
//! bicluster benchmark ([`simgen`], [`evaluate`]), an ingestion pipeline for
//! per-study p-value files ([`sumstats`]) and post-decomposition reporting
//! ([`analysis`]).

pub mod analysis;
pub mod cli;
pub mod error;
pub mod evaluate;
pub mod numerics;
pub mod simgen;
pub mod solver;
pub mod sumstats;

pub use error::{Error, Result};
pub use numerics::{BoolMatrix, DenseMatrix, SvdFactors};
pub use solver::{SolverConfig, SolverResult, Threshold};
