//! Nonnegative sparse recovery from 0/1-Bernoulli and Gaussian measurements.
//!
//! * [`ndcore`]: dense matrices, Householder least squares, seeded streams.
//! * [`measure`]: random ensembles, sparse nonnegative signals and noise.
//! * [`solvers`]: NNLS (Lawson–Hanson), BPDN with and without a sign
//!   constraint, ℓ1-squared regularization and a dense simplex LP solver.
//! * [`nsp`]: nullspace-property checks, positive-orthant certificates and
//!   the condition number of the induced weighting.
//! * [`theory`]: closed-form probability bounds and their Monte-Carlo checks.
//! * [`expharness`]: recovery experiments with CSV and SVG output.

// index loops mirror the matrix algebra; `!(x >= 0.0)` also rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod expharness;
pub mod measure;
pub mod ndcore;
pub mod nsp;
pub mod solvers;
pub mod theory;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
