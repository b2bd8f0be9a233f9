use crate::ndcore::{DenseMatrix, Vector};
use crate::solvers::{lp_solve, LpProblem, LpStatus};

use super::{error_constants, NspError};

/// A vector `t` with `w = Aᵀt`, and `κ(w) = max w / min w`.
#[derive(Debug, Clone, PartialEq)]
pub struct MplusCertificate {
    pub t: Vector,
    pub w: Vector,
    /// `+∞` unless `feasible`.
    pub kappa_w: f64,
    /// `w > 0` entrywise.
    pub feasible: bool,
}

impl MplusCertificate {
    fn from_t(a: &DenseMatrix, t: Vec<f64>) -> Self {
        let w = a.tr_mul_vec_unchecked(&t);
        let feasible = !w.is_empty() && w.iter().all(|&v| v > 0.0);
        let kappa_w = if feasible { w_max(&w) / w_min(&w) } else { f64::INFINITY };
        Self { t: Vector::from_vec_unchecked(t), w: Vector::from_vec_unchecked(w), kappa_w, feasible }
    }

    fn infeasible(a: &DenseMatrix) -> Self {
        Self {
            t: Vector::zeros(a.rows()),
            w: Vector::zeros(a.cols()),
            kappa_w: f64::INFINITY,
            feasible: false,
        }
    }

    /// `‖W⁻¹‖ = 1 / min w`.
    pub fn w_inv_norm(&self) -> f64 {
        1.0 / w_min(&self.w)
    }

    /// `‖W‖ = max w`.
    pub fn w_norm(&self) -> f64 {
        w_max(&self.w)
    }

    pub fn t_norm(&self) -> f64 {
        self.t.norm2()
    }
}

fn w_max(w: &[f64]) -> f64 {
    w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn w_min(w: &[f64]) -> f64 {
    w.iter().copied().fold(f64::INFINITY, f64::min)
}

fn lp_error(status: LpStatus) -> NspError {
    NspError::Lp(status)
}

/// Decides `A ∈ M⁺` by the feasibility LP `Aᵀt ≥ 1`.
///
/// A strictly positive row `k` short-circuits with `t = e_k / min_j a_kj`.
pub fn check_mplus(a: &DenseMatrix) -> Result<MplusCertificate, NspError> {
    let (m, n) = (a.rows(), a.cols());
    for k in 0..m {
        let row = a.row(k);
        let lo = w_min(&row);
        if lo > 0.0 {
            let mut t = vec![0.0; m];
            t[k] = 1.0 / lo;
            return Ok(MplusCertificate::from_t(a, t));
        }
    }
    // variables (t free, u ≥ 0): Aᵀt − u = 1
    let mut lhs = DenseMatrix::zeros(n, m + n);
    for j in 0..n {
        for i in 0..m {
            lhs.set(j, i, a.get(i, j));
        }
        lhs.set(j, m + j, -1.0);
    }
    let mut lower = vec![f64::NEG_INFINITY; m];
    lower.extend(std::iter::repeat_n(0.0, n));
    let problem = LpProblem {
        c: vec![0.0; m + n],
        a_eq: lhs,
        b_eq: vec![1.0; n],
        lower,
        upper: vec![f64::INFINITY; m + n],
    };
    let sol = lp_solve(&problem)?;
    match sol.status {
        LpStatus::Optimal => {
            let cert = MplusCertificate::from_t(a, sol.x[..m].to_vec());
            Ok(if cert.feasible { cert } else { MplusCertificate::infeasible(a) })
        }
        LpStatus::Infeasible => Ok(MplusCertificate::infeasible(a)),
        other => Err(lp_error(other)),
    }
}

/// `κ(A) = min_t max(Aᵀt)/min(Aᵀt)` over `Aᵀt > 0`, with a minimizing `t`.
///
/// The ratio is scale invariant, so fixing `min Aᵀt ≥ 1` turns it into the
/// LP `min u s.t. 1 ≤ Aᵀt ≤ u·1`.
pub fn condition_number(a: &DenseMatrix) -> Result<MplusCertificate, NspError> {
    let (m, n) = (a.rows(), a.cols());
    // variables: t (m, free), u (free), s (n, ≥ 0), q (n, ≥ 0)
    //   Aᵀt − s = 1,  Aᵀt − u·1 + q = 0
    let cols = m + 1 + 2 * n;
    let mut lhs = DenseMatrix::zeros(2 * n, cols);
    for j in 0..n {
        for i in 0..m {
            lhs.set(j, i, a.get(i, j));
            lhs.set(n + j, i, a.get(i, j));
        }
        lhs.set(j, m + 1 + j, -1.0);
        lhs.set(n + j, m, -1.0);
        lhs.set(n + j, m + 1 + n + j, 1.0);
    }
    let mut c = vec![0.0; cols];
    c[m] = 1.0;
    let mut lower = vec![f64::NEG_INFINITY; m + 1];
    lower.extend(std::iter::repeat_n(0.0, 2 * n));
    let mut b = vec![1.0; n];
    b.extend(std::iter::repeat_n(0.0, n));
    let problem = LpProblem { c, a_eq: lhs, b_eq: b, lower, upper: vec![f64::INFINITY; cols] };
    let sol = lp_solve(&problem)?;
    match sol.status {
        LpStatus::Optimal => {
            let cert = MplusCertificate::from_t(a, sol.x[..m].to_vec());
            if cert.feasible {
                Ok(cert)
            } else {
                Err(NspError::NotInMplus)
            }
        }
        LpStatus::Infeasible => Err(NspError::NotInMplus),
        other => Err(lp_error(other)),
    }
}

/// The weighting `w = Aᵀt` for `t = (1/(pm))·1_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightReport {
    pub certificate: MplusCertificate,
    /// `max w ≤ 3/2` and `min w ≥ 1/2`, which forces `κ(w) ≤ 3`.
    pub event: bool,
    /// `‖t‖₂ = 1/(p√m)`.
    pub t_norm: f64,
}

pub fn build_w(a: &DenseMatrix, p: f64) -> Result<WeightReport, NspError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(NspError::InvalidParameter(format!("p = {p} outside (0, 1]")));
    }
    let m = a.rows() as f64;
    let t = vec![1.0 / (p * m); a.rows()];
    let certificate = MplusCertificate::from_t(a, t);
    let event = certificate.feasible && w_max(&certificate.w) <= 1.5 && w_min(&certificate.w) >= 0.5;
    Ok(WeightReport { certificate, event, t_norm: 1.0 / (p * m.sqrt()) })
}

/// Error-bound inputs for one choice of `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightChoice {
    pub kappa: f64,
    pub w_inv_norm: f64,
    pub t_norm: f64,
    /// `(C′, D′)`; `None` when `κρ ≥ 1` or `w` is not positive.
    pub constants: Option<(f64, f64)>,
}

impl WeightChoice {
    fn from_certificate(cert: &MplusCertificate, rho: f64) -> Self {
        let (kappa, w_inv_norm) = if cert.feasible {
            (cert.kappa_w, cert.w_inv_norm())
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        let constants = if cert.feasible { error_constants(rho, kappa, w_inv_norm).ok() } else { None };
        Self { kappa, w_inv_norm, t_norm: cert.t_norm(), constants }
    }
}

/// Constants for the `κ`-optimal `t` and for the uniform `t = (1/(pm))·1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightComparison {
    pub optimal: Option<WeightChoice>,
    pub uniform: WeightChoice,
}

pub fn compare_weightings(a: &DenseMatrix, p: f64, rho: f64) -> Result<WeightComparison, NspError> {
    let uniform = WeightChoice::from_certificate(&build_w(a, p)?.certificate, rho);
    let optimal = match condition_number(a) {
        Ok(cert) => Some(WeightChoice::from_certificate(&cert, rho)),
        Err(NspError::NotInMplus) => None,
        Err(e) => return Err(e),
    };
    Ok(WeightComparison { optimal, uniform })
}
