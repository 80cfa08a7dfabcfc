//! Distances between completely positive maps on finite-dimensional
//! C*-algebras, built from Choi-Jamiolkowski functionals and
//! Monge-Kantorovich metrics of spectral-triple seminorms.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod channels;
pub mod error;
pub mod geometry;
pub mod groups;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod random;
pub mod sdp;

pub use error::{Error, Result};

/// Residual tolerance for structural identities (closure, unit, tracial).
pub const EPS_STRUCT: f64 = 1e-9;
/// Eigenvalue floor for PSD tests, relative to the largest eigenvalue modulus.
pub const EPS_PSD: f64 = 1e-9;
/// Gap and feasibility tolerance of the semidefinite solver.
pub const EPS_SOLVER: f64 = 1e-7;
