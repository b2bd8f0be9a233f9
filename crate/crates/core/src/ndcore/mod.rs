//! Dense linear algebra and seeded random streams.
//!
//! Everything above this layer works on [`DenseMatrix`] (column-major) and
//! [`Vector`]. Randomness always flows through [`SeededRng`] so that a
//! single 64-bit seed reproduces an entire experiment.

mod matrix;
mod qr;
mod rng;
pub mod textio;
mod vector;

pub use matrix::{mat_vec, DenseMatrix};
pub use qr::{ls_solve, QrFactor};
pub use rng::{derive_seed, SeededRng};
pub use vector::{dot, norms, Norms, Vector};
pub(crate) use vector::{l2, sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry at position {index}")]
    NonFinite { index: usize },
    #[error("matrix is rank deficient (column {column} is dependent on earlier ones)")]
    RankDeficient { column: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
