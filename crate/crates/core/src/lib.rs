//! Fuel-optimal control of linear time-invariant systems whose inputs are
//! restricted to a finite set.
//!
//! The mixed-integer problem is replaced by a linear program over the convex
//! hull of the input set (a cross-polytope) with an epigraph slack for the
//! 1-norm fuel cost. When the plant is controllable the relaxed optimum takes
//! values at the hull's vertices, which belong to the original set, so the
//! relaxation loses nothing. This crate builds that program, solves it with a
//! bundled interior-point method, certifies discreteness of the result, and
//! cross-checks small instances against brute-force enumeration.
//!
//! Module map:
//!
//! - [`linsys`]: plants, controllability, matrix exponential, zero-order hold
//! - [`inputset`]: discrete input sets and their hull geometry
//! - [`transcription`]: the linear program and its variable layout
//! - [`lpsolve`]: interior-point LP solver and KKT auditing
//! - [`analysis`]: discreteness metrics and bang-bang certification
//! - [`oracle`]: exhaustive enumeration baseline
//! - [`harness`]: problem files, rendezvous scenario, sweeps and Monte Carlo

// Index loops mirror the sparse-matrix notation; `!(a <= b)` comparisons reject NaN on purpose.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod analysis;
pub mod exec;
pub mod harness;
pub mod inputset;
pub mod linsys;
pub mod lpsolve;
pub mod oracle;
pub mod transcription;

pub use error::{Error, Result};
