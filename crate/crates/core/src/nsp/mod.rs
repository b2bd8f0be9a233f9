//! Nullspace-property diagnostics and positive-orthant weightings.
//!
//! The robust NSP of order `s` with parameters `(ρ, τ)` asks that
//! `‖v_S‖₂ ≤ (ρ/√s)‖v_S̄‖₁ + τ‖Av‖₂` for all `v` and `|S| ≤ s`. Equivalently,
//! `‖Av‖₂ ≥ 1/τ` on the set `T_{ρ,s}` of unit vectors with
//! `‖v_s‖₂ > (ρ/√s)‖v_c‖₁`, where `v_s` keeps the `s` largest magnitudes.

mod exact;
mod mplus;
mod robust;

pub use exact::{check_l1_nsp_exact, ExactNspOptions};
pub use mplus::{build_w, check_mplus, condition_number, compare_weightings, MplusCertificate, WeightChoice, WeightComparison, WeightReport};
pub use robust::{estimate_robust_nsp, sphere_grid, sphere_search, GridOutcome, RobustNspOptions, SearchOutcome};

use thiserror::Error;

use crate::ndcore::Vector;
use crate::solvers::{LpStatus, SolveError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NspError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("vector must have unit ℓ2 norm, found {norm}")]
    NotUnitNorm { norm: f64 },
    #[error("matrix is not in M⁺: no t with Aᵀt > 0")]
    NotInMplus,
    #[error("exact check refused: n = {n}, s = {s} exceeds the guard (n ≤ {max_n}, s ≤ {max_s})")]
    GuardExceeded { n: usize, s: usize, max_n: usize, max_s: usize },
    #[error("LP terminated with status {0:?}")]
    Lp(LpStatus),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NspMethod {
    ExactL1Lp,
    RandomizedL2,
    GridL2,
}

impl NspMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ExactL1Lp => "exact_l1_lp",
            Self::RandomizedL2 => "randomized_l2",
            Self::GridL2 => "grid_l2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NspStatus {
    Holds,
    Fails,
    EvidenceOnly,
}

impl NspStatus {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Holds => "holds",
            Self::Fails => "fails",
            Self::EvidenceOnly => "evidence_only",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NspReport {
    pub s: usize,
    /// Input `ρ` for the ℓ2 checks; the worst ratio `‖v_S‖₁/‖v_S̄‖₁` over the
    /// kernel for the exact ℓ1 check.
    pub rho: f64,
    /// `1/q̂`; `None` when `q̂ = 0`.
    pub tau_estimate: Option<f64>,
    pub method: NspMethod,
    pub status: NspStatus,
    /// Violating vector when `status = Fails`, otherwise the best point found.
    pub witness: Option<Vector>,
    /// `q̂` for the ℓ2 checks, the worst ratio for the exact check.
    pub value: f64,
    /// Grid-certified lower bound on `inf_T ‖Av‖₂` (grid method only).
    pub certified_lower: Option<f64>,
}

/// `(‖v_s‖₂, ‖v_c‖₁)` with `v_s` the `s` largest magnitudes, ties to the
/// lowest index.
pub(crate) fn head_tail(v: &[f64], s: usize) -> (f64, f64) {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
    let k = s.min(v.len());
    let head = idx[..k].iter().map(|&i| v[i] * v[i]).sum::<f64>().sqrt();
    let tail = idx[k..].iter().map(|&i| v[i].abs()).sum();
    (head, tail)
}

/// `‖v_s‖₂ − (ρ/√s)‖v_c‖₁`; positive exactly on `T_{ρ,s}` for unit `v`.
pub(crate) fn t_margin(v: &[f64], rho: f64, s: usize) -> f64 {
    let (head, tail) = head_tail(v, s);
    head - rho / (s as f64).sqrt() * tail
}

/// Membership in `T_{ρ,s}`.
pub fn in_t(v: &[f64], rho: f64, s: usize) -> Result<bool, NspError> {
    let norm = crate::ndcore::l2(v);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(NspError::NotUnitNorm { norm });
    }
    if s == 0 {
        return Err(NspError::InvalidParameter("s must be positive".into()));
    }
    Ok(t_margin(v, rho, s) > 0.0)
}

fn check_rho(rho: f64) -> Result<(), NspError> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(NspError::InvalidParameter(format!("rho = {rho} outside (0, 1)")))
    }
}

/// `(C′, D′)` of the nonnegative error bound for a weighting with condition
/// number `κ` and `‖W⁻¹‖`.
pub fn error_constants(rho: f64, kappa: f64, w_inv_norm: f64) -> Result<(f64, f64), NspError> {
    if !(rho >= 0.0) || !(kappa >= 1.0) || !(w_inv_norm > 0.0) {
        return Err(NspError::InvalidParameter(format!(
            "need rho ≥ 0, kappa ≥ 1, ‖W⁻¹‖ > 0 (rho = {rho}, kappa = {kappa}, ‖W⁻¹‖ = {w_inv_norm})"
        )));
    }
    let kr = kappa * rho;
    if kr >= 1.0 {
        return Err(NspError::InvalidParameter(format!("kappa·rho = {kr} must be < 1")));
    }
    let c = kappa * (1.0 + kr).powi(2) / (1.0 - kr);
    let d = (3.0 + kr) / (1.0 - kr) * kappa.max(w_inv_norm);
    Ok((c, d))
}

/// `(C, D)` of the standard robust-NSP error bound.
pub fn baseline_constants(rho: f64) -> Result<(f64, f64), NspError> {
    check_rho(rho)?;
    Ok(((1.0 + rho).powi(2) / (1.0 - rho), (3.0 + rho) / (1.0 - rho)))
}
