//! Distributed Kalman filtering over an undirected sensor network.
//!
//! Each node runs a local estimator. The state correction is a consensus
//! ADMM loop in which nodes exchange only their primal iterates; the global
//! information-rate matrix is agreed on by a one-step-per-sample consensus
//! recursion on half-vectorized matrices.
//!
//! Modules, bottom-up:
//!
//! - [`graph`]: sensor graphs, Laplacians and their spectra.
//! - [`linalg`]: symmetric-matrix helpers, SPD solves, the Riccati solver.
//! - [`stability`]: per-mode iteration matrices and Schur checks for the
//!   step-size bounds.
//! - [`model`]: the linear-Gaussian system and trajectory generator.
//! - [`oracle`]: centralized references (information-form KF, consensus
//!   fixed point).
//! - [`dkf`]: the per-node engine, wire layer and communication ledger.

pub mod dkf;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod stability;

pub use error::{Error, Result};
