//! Closed-form probability bounds for 0/1-Bernoulli designs.
//!
//! Every bound here has a Monte-Carlo counterpart in [`mc`] so that it can be
//! checked empirically. Probabilities are clamped to `[0, 1]`; the raw bounds
//! exceed 1 in non-informative regimes.

mod mc;

pub use mc::{
    mc_small_ball_rhs, mc_tail, mc_tail_multi, mc_variance, mc_wm, top_s_energy, McSettings, MonteCarlo, SmallBallCheck,
};

use thiserror::Error;

use crate::ndcore::l2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("p = {0} outside the admissible range")]
    InvalidProbability(f64),
    #[error("bound diverges at p = {0}")]
    Divergent(f64),
    #[error("vector must have unit ℓ2 norm, found {0}")]
    NotUnit(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// `u / atanh(u)`, with the series `1 − u²/3` near 0.
fn u_over_atanh(u: f64) -> f64 {
    if u.abs() < 1e-6 {
        1.0 - u * u / 3.0
    } else {
        u / u.atanh()
    }
}

fn check_open(p: f64) -> Result<(), TheoryError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else if p == 0.0 || p == 1.0 {
        Err(TheoryError::Divergent(p))
    } else {
        Err(TheoryError::InvalidProbability(p))
    }
}

fn check_closed(p: f64) -> Result<(), TheoryError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(TheoryError::InvalidProbability(p))
    }
}

/// Subgaussian parameter of a centered Bernoulli(`p`) variable,
/// `√((2p−1) / (2 log(p/(1−p))))`, extended by continuity to `{0, ½, 1}`.
///
/// With `u = 2p − 1`, `log(p/(1−p)) = 2 atanh(u)`, so `θ² = u / (4 atanh u)`.
pub fn theta(p: f64) -> Result<f64, TheoryError> {
    check_closed(p)?;
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(0.5 * u_over_atanh(2.0 * p - 1.0).sqrt())
}

/// `(α(p), β(p))` of the sampling rate.
///
/// `α = (2p−1) / (p³(1−p)³ log(p/(1−p)))`, `β = 2p² log(p/(1−p)) / (2p−1)`;
/// `α(½) = 32`, `β(½) = 1`.
pub fn alpha_beta(p: f64) -> Result<(f64, f64), TheoryError> {
    check_open(p)?;
    let r = u_over_atanh(2.0 * p - 1.0);
    let pq = p * (1.0 - p);
    Ok((r / (2.0 * pq.powi(3)), 4.0 * p * p / r))
}

fn check_sparsity(n: usize, s: usize) -> Result<(), TheoryError> {
    if s == 0 || s > n {
        return Err(TheoryError::InvalidParameter(format!("s = {s} outside 1..={n}")));
    }
    Ok(())
}

fn check_rho(rho: f64) -> Result<(), TheoryError> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(TheoryError::InvalidParameter(format!("rho = {rho} outside (0, 1)")))
    }
}

/// `log(en/s)`.
fn log_en_s(n: usize, s: usize) -> f64 {
    1.0 + (n as f64 / s as f64).ln()
}

/// Rows sufficient for the robust NSP: `⌈(C1/ρ²)·α·s·(log(en/s) + β)⌉`.
pub fn sampling_rate(n: usize, s: usize, rho: f64, p: f64, c1: f64) -> Result<u64, TheoryError> {
    check_sparsity(n, s)?;
    check_rho(rho)?;
    if !(c1 > 0.0) {
        return Err(TheoryError::InvalidParameter(format!("C1 = {c1} must be positive")));
    }
    let (alpha, beta) = alpha_beta(p)?;
    let m = c1 / (rho * rho) * alpha * s as f64 * (log_en_s(n, s) + beta);
    Ok(m.ceil() as u64)
}

/// The simplified `p = ½` rate `(C1/(128ρ²))·s·log n`.
///
/// Reported alongside [`sampling_rate`] only; the two do not agree under
/// direct substitution of `α(½) = 32`.
pub fn corollary_rate(n: usize, s: usize, rho: f64, c1: f64) -> Result<f64, TheoryError> {
    check_sparsity(n, s)?;
    check_rho(rho)?;
    Ok(c1 / (128.0 * rho * rho) * s as f64 * (n as f64).ln())
}

/// Upper bound `20θ√(s(log(en/s) + p²/θ²))` on the mean empirical width of
/// the `s`-sparse unit sphere.
pub fn wm_bound(n: usize, s: usize, p: f64) -> Result<f64, TheoryError> {
    check_sparsity(n, s)?;
    check_open(p)?;
    let th = theta(p)?;
    // θ²·(log + p²/θ²) avoids dividing by a small θ
    Ok(20.0 * (s as f64 * (th * th * log_en_s(n, s) + p * p)).sqrt())
}

/// Paley–Zygmund lower bound `(4/13)p(1−p)(1−θ²)²` on
/// `Pr[|⟨a, z⟩| ≥ θ√(p(1−p))]`.
pub fn q_bound(p: f64, theta_arg: f64) -> Result<f64, TheoryError> {
    check_closed(p)?;
    if !(0.0..=1.0).contains(&theta_arg) {
        return Err(TheoryError::InvalidParameter(format!("theta = {theta_arg} outside [0, 1]")));
    }
    Ok(4.0 / 13.0 * p * (1.0 - p) * (1.0 - theta_arg * theta_arg).powi(2))
}

pub(crate) fn check_unit(z: &[f64]) -> Result<(), TheoryError> {
    let norm = l2(z);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(TheoryError::NotUnit(norm));
    }
    Ok(())
}

/// `(Var S, E S)` for `S = ⟨a, z⟩²`, `a` with i.i.d. Bernoulli(`p`) entries.
pub fn var_s_closed(z: &[f64], p: f64) -> Result<(f64, f64), TheoryError> {
    check_unit(z)?;
    check_closed(p)?;
    let sum: f64 = z.iter().sum();
    let cubes: f64 = z.iter().map(|v| v * v * v).sum();
    let l4: f64 = z.iter().map(|v| v.powi(4)).sum();
    let q = 1.0 - p;
    let mean = p * p * sum * sum + p * q;
    let var = 2.0 * mean * mean - 2.0 * p.powi(4) * sum.powi(4)
        + 4.0 * p * p * q * (1.0 - 2.0 * p) * sum * cubes
        + p * q * (1.0 - 6.0 * p * q) * l4;
    Ok((var, mean))
}

/// `n·e^{−(3/8)p(1−p)m}`, clamped: failure probability of the weighting event.
pub fn bernstein_fail_prob(p: f64, m: usize, n: usize) -> Result<f64, TheoryError> {
    check_open(p)?;
    Ok((n as f64 * (-0.375 * p * (1.0 - p) * m as f64).exp()).min(1.0))
}

/// `((n+1)·e^{−p²(1−p)²m/72}, e^{−p²(1−p)²m/72})`, both clamped.
pub fn union_fail_prob(p: f64, m: usize, n: usize) -> Result<(f64, f64), TheoryError> {
    check_open(p)?;
    let pq = p * (1.0 - p);
    let nsp = (-pq * pq * m as f64 / 72.0).exp();
    Ok((((n + 1) as f64 * nsp).min(1.0), nsp.min(1.0)))
}

/// Pieces of the multiplier of `‖e‖₂` in the NNLS error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorCoefficient {
    /// `E′ = 2D′(1 + C2)`.
    pub e_prime: f64,
    /// `E′ / (√(p(1−p))³ √m)`.
    pub coefficient: f64,
    /// `τ = C2 / (√(p(1−p))³ √m)`.
    pub tau: f64,
    /// `‖t‖₂ = 1/(p√m)` for `t = (1/(pm))·1`.
    pub t_norm: f64,
}

pub fn recovery_error_coeff(p: f64, m: usize, c2: f64, d_prime: f64) -> Result<ErrorCoefficient, TheoryError> {
    check_open(p)?;
    if m == 0 {
        return Err(TheoryError::InvalidParameter("m must be positive".into()));
    }
    let scale = (p * (1.0 - p)).powf(1.5) * (m as f64).sqrt();
    let e_prime = 2.0 * d_prime * (1.0 + c2);
    Ok(ErrorCoefficient {
        e_prime,
        coefficient: e_prime / scale,
        tau: c2 / scale,
        t_norm: 1.0 / (p * (m as f64).sqrt()),
    })
}

/// Default small-ball level `ξ₀ = ¼√(p(1−p))`.
pub fn default_xi(p: f64) -> f64 {
    0.25 * (p * (1.0 - p)).sqrt()
}

/// Default deviation `t₀ = (p(1−p)/12)√m`.
pub fn default_t_dev(p: f64, m: usize) -> f64 {
    p * (1.0 - p) / 12.0 * (m as f64).sqrt()
}

/// Tail bound used for `Q_{2ξ}`: the Paley–Zygmund bound at
/// `θ = 2ξ/√(p(1−p))`, and 0 once that exceeds 1.
pub fn q_at(p: f64, xi: f64) -> Result<f64, TheoryError> {
    check_open(p)?;
    let arg = 2.0 * xi / (p * (1.0 - p)).sqrt();
    if arg > 1.0 {
        Ok(0.0)
    } else {
        q_bound(p, arg)
    }
}

/// Lower bound `ξ√m·Q_{2ξ} − ξt − 2·(3/ρ)·W_m(Σ_s)` on `inf_T ‖Av‖₂`, which
/// holds with probability at least `1 − e^{−2t²}`.
pub fn small_ball_rhs(n: usize, m: usize, s: usize, p: f64, rho: f64, xi: f64, t_dev: f64) -> Result<f64, TheoryError> {
    check_rho(rho)?;
    if !(xi > 0.0) || !(t_dev >= 0.0) {
        return Err(TheoryError::InvalidParameter(format!("need xi > 0 and t ≥ 0 (xi = {xi}, t = {t_dev})")));
    }
    let width = 3.0 / rho * wm_bound(n, s, p)?;
    Ok(xi * (m as f64).sqrt() * q_at(p, xi)? - xi * t_dev - 2.0 * width)
}

/// Condition number and `‖W⁻¹‖` guaranteed on the weighting event.
pub const EVENT_KAPPA: f64 = 3.0;
pub const EVENT_W_INV_NORM: f64 = 2.0;

/// All closed-form quantities for one design point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSet {
    pub p: f64,
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub rho: f64,
    pub c1: f64,
    pub c2: f64,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub m_required: u64,
    /// The simplified `p = ½` rate; flagged, not reconciled with `m_required`.
    pub corollary_m: f64,
    pub wm_bound: f64,
    /// `Q_{2ξ₀}` bound at `ξ₀ = ¼√(p(1−p))`.
    pub q_xi0: f64,
    pub small_ball_rhs: f64,
    pub nsp_fail_prob: f64,
    pub bernstein_fail_prob: f64,
    pub union_fail_prob: f64,
    pub tau: f64,
    pub t_norm: f64,
    /// `(C′, D′)` at `κ = 3`, `‖W⁻¹‖ = 2`; `None` when `3ρ ≥ 1`.
    pub constants: Option<(f64, f64)>,
    pub err_coeff: Option<f64>,
}

impl BoundSet {
    pub fn new(n: usize, m: usize, s: usize, p: f64, rho: f64, c1: f64, c2: f64) -> Result<Self, TheoryError> {
        if m == 0 {
            return Err(TheoryError::InvalidParameter("m must be positive".into()));
        }
        let th = theta(p)?;
        let (alpha, beta) = alpha_beta(p)?;
        let (union, nsp) = union_fail_prob(p, m, n)?;
        let constants = crate::nsp::error_constants(rho, EVENT_KAPPA, EVENT_W_INV_NORM).ok();
        let coeff = recovery_error_coeff(p, m, c2, constants.map_or(f64::NAN, |c| c.1))?;
        Ok(Self {
            p,
            n,
            m,
            s,
            rho,
            c1,
            c2,
            theta: th,
            alpha,
            beta,
            m_required: sampling_rate(n, s, rho, p, c1)?,
            corollary_m: corollary_rate(n, s, rho, c1)?,
            wm_bound: wm_bound(n, s, p)?,
            q_xi0: q_at(p, default_xi(p))?,
            small_ball_rhs: small_ball_rhs(n, m, s, p, rho, default_xi(p), default_t_dev(p, m))?,
            nsp_fail_prob: nsp,
            bernstein_fail_prob: bernstein_fail_prob(p, m, n)?,
            union_fail_prob: union,
            tau: coeff.tau,
            t_norm: coeff.t_norm,
            constants,
            err_coeff: constants.map(|_| coeff.coefficient),
        })
    }

    pub fn q_at(&self, xi: f64) -> Result<f64, TheoryError> {
        q_at(self.p, xi)
    }

    /// Ordered `key=value` pairs; missing values print as `NA`.
    pub fn to_kv(&self) -> Vec<(String, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        let mut kv: Vec<(&str, String)> = vec![
            ("n", self.n.to_string()),
            ("m", self.m.to_string()),
            ("s", self.s.to_string()),
            ("p", self.p.to_string()),
            ("rho", self.rho.to_string()),
            ("c1", self.c1.to_string()),
            ("c2", self.c2.to_string()),
            ("theta", self.theta.to_string()),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("m_required", self.m_required.to_string()),
            ("corollary_m_flagged", self.corollary_m.to_string()),
            ("wm_bound", self.wm_bound.to_string()),
            ("q_xi0", self.q_xi0.to_string()),
            ("small_ball_rhs", self.small_ball_rhs.to_string()),
            ("nsp_fail_prob", self.nsp_fail_prob.to_string()),
            ("bernstein_fail_prob", self.bernstein_fail_prob.to_string()),
            ("union_fail_prob", self.union_fail_prob.to_string()),
            ("tau", self.tau.to_string()),
            ("t_norm", self.t_norm.to_string()),
        ];
        kv.push(("c_prime", opt(self.constants.map(|c| c.0))));
        kv.push(("d_prime", opt(self.constants.map(|c| c.1))));
        kv.push(("err_coeff", opt(self.err_coeff)));
        kv.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}
