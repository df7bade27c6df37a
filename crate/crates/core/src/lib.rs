//! Planar central and balanced configurations of the n-body problem and of
//! the (n+1)-body problem with one very small mass.
//!
//! The crate is organised bottom-up:
//!
//! * [`mechanics`] evaluates the potential, the relative-equilibrium residual
//!   systems, their derivatives and the symmetry operations on configurations.
//! * [`sampling`] produces start points in a box (pseudo-random, Halton, Sobol,
//!   Faure, Latin hypercube and a chaotic map).
//! * [`local_solver`] is a box-constrained Levenberg–Marquardt least-squares
//!   solver.
//! * [`multistart`] drives the local solver from many samples and keeps a
//!   registry of distinct solutions.
//! * [`continuation`] computes (n+1)-body solutions from n-body solutions and
//!   the critical points of the restricted problem.
//! * [`metrics`] re-verifies solutions and computes the RMS deviation metrics.

// `!(x >= tol)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod continuation;
pub mod error;
pub mod local_solver;
pub mod mechanics;
pub mod metrics;
pub mod multistart;
pub mod problems;
pub mod sampling;

pub use error::{CoreError, Result};
pub use mechanics::{MassSystem, PlanarConfiguration, ScaleMatrix, SymmetryMode};
