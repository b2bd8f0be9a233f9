//! Recovery algorithms and the LP backend.

mod bpdn;
mod lp;
mod nnls;

pub use bpdn::{bpdn, bpdn_nn, BpdnOptions, BpdnResult};
pub use lp::{lp_solve, LpProblem, LpSolution, LpStatus};
pub use nnls::{l1sq_nnreg, nnls, nnls_default, NnlsResult};

use thiserror::Error;

use crate::ndcore::LinalgError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible: smallest attainable residual {min_residual} exceeds eta = {eta}")]
    Infeasible { min_residual: f64, eta: f64 },
}

/// Which recovery program a trial runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Nnls,
    Bpdn,
    BpdnNn,
    L1Sq,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Nnls => "nnls",
            Self::Bpdn => "bpdn",
            Self::BpdnNn => "bpdn_nn",
            Self::L1Sq => "l1sq",
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = SolveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nnls" => Ok(Self::Nnls),
            "bpdn" => Ok(Self::Bpdn),
            "bpdn_nn" | "bpdn-nn" => Ok(Self::BpdnNn),
            "l1sq" => Ok(Self::L1Sq),
            other => Err(SolveError::InvalidParameter(format!("unknown solver `{other}`"))),
        }
    }
}
