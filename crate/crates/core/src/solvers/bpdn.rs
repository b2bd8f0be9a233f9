//! Basis pursuit denoising by the exact LASSO homotopy.
//!
//! For `η < ‖y‖` the minimizer of `‖x‖₁ s.t. ‖Ax − y‖₂ ≤ η` is the LASSO
//! solution `argmin ½‖Ax − y‖² + λ‖x‖₁` at the `λ` where the residual norm
//! equals `η`. The LASSO solution is piecewise linear in `λ` and the residual
//! norm is monotone along it, so walking the path from `λ₀ = ‖Aᵀy‖∞` down and
//! solving a scalar quadratic on the final segment gives the exact answer.
//! With `η = 0` the walk runs to `λ = 0⁺`, which is basis pursuit.

use crate::ndcore::{l2, DenseMatrix, LinalgError, QrFactor, Vector};

use super::SolveError;

#[derive(Debug, Clone, PartialEq)]
pub struct BpdnOptions {
    /// Relative tolerance under which an inactive correlation counts as
    /// touching `λ`.
    pub tol: f64,
    /// Cap on path segments; `None` means `50·max(m, n) + 100`.
    pub max_iter: Option<usize>,
    /// Slack allowed on `‖Ax − y‖ ≤ η`; `None` means `1e-6·max(1, ‖y‖)`.
    pub feas_tol: Option<f64>,
}

impl Default for BpdnOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: None, feas_tol: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpdnResult {
    pub x: Vector,
    /// `‖x‖₁`.
    pub objective: f64,
    /// `η − ‖Ax − y‖₂`; nonnegative up to `feas_tol`.
    pub constraint_slack: f64,
    /// Primal objective minus the value of a feasible dual point.
    pub duality_gap_estimate: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `argmin ‖x‖₁ s.t. ‖Ax − y‖₂ ≤ η`.
pub fn bpdn(a: &DenseMatrix, y: &[f64], eta: f64, opts: &BpdnOptions) -> Result<BpdnResult, SolveError> {
    homotopy(a, y, eta, opts, false)
}

/// `argmin ‖x‖₁ s.t. ‖Ax − y‖₂ ≤ η, x ≥ 0`.
pub fn bpdn_nn(a: &DenseMatrix, y: &[f64], eta: f64, opts: &BpdnOptions) -> Result<BpdnResult, SolveError> {
    homotopy(a, y, eta, opts, true)
}

struct Segment {
    x_s: Vec<f64>,
    d: Vec<f64>,
    r: Vec<f64>,
    v: Vec<f64>,
}

fn segment(a: &DenseMatrix, y: &[f64], active: &[usize], signs: &[f64], lambda: f64) -> Result<Segment, LinalgError> {
    let a_s = a.select_columns(active);
    let qr = QrFactor::new(&a_s)?;
    let aty = a_s.tr_mul_vec_unchecked(y);
    let rhs: Vec<f64> = aty.iter().zip(signs).map(|(c, s)| c - lambda * s).collect();
    let x_s = qr.solve_gram(&rhs)?.into_inner();
    let d = qr.solve_gram(signs)?.into_inner();
    let ax = a_s.mul_vec_unchecked(&x_s);
    let r = y.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let v = a_s.mul_vec_unchecked(&d);
    Ok(Segment { x_s, d, r, v })
}

fn full_rank(a: &DenseMatrix, active: &[usize]) -> bool {
    active.len() <= a.rows() && QrFactor::new(&a.select_columns(active)).is_ok()
}

/// Smallest `γ ∈ [0, limit]` with `‖r − γv‖ = η`, given `‖r‖ > η`.
fn crossing(r: &[f64], v: &[f64], eta: f64, limit: f64) -> Option<f64> {
    let vv: f64 = v.iter().map(|t| t * t).sum();
    if vv == 0.0 {
        return None;
    }
    let rv: f64 = r.iter().zip(v).map(|(p, q)| p * q).sum();
    let rr: f64 = r.iter().map(|t| t * t).sum();
    let c = rr - eta * eta;
    let disc = rv * rv - vv * c;
    if disc < 0.0 {
        return None;
    }
    // stable smaller root of vv·γ² − 2rv·γ + c
    let q = rv + disc.sqrt();
    if q <= 0.0 {
        return None;
    }
    let gamma = c / q;
    (gamma <= limit).then_some(gamma.max(0.0))
}

fn homotopy(
    a: &DenseMatrix,
    y: &[f64],
    eta: f64,
    opts: &BpdnOptions,
    nonneg: bool,
) -> Result<BpdnResult, SolveError> {
    let (m, n) = (a.rows(), a.cols());
    if y.len() != m {
        return Err(LinalgError::DimensionMismatch { expected: m, found: y.len() }.into());
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(SolveError::InvalidParameter(format!("eta = {eta} must be finite and nonnegative")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::InvalidParameter("y has non-finite entries".into()));
    }
    let y_norm = l2(y);
    let feas_tol = opts.feas_tol.unwrap_or(1e-6 * y_norm.max(1.0));
    let max_iter = opts.max_iter.unwrap_or(50 * m.max(n) + 100);

    let c0 = a.tr_mul_vec_unchecked(y);
    let lambda0 = if nonneg {
        c0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        c0.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    };
    if eta >= y_norm {
        return Ok(finish(a, y, eta, vec![0.0; n], &[], None, 0, true, nonneg));
    }
    if !(lambda0 > 0.0) {
        // x = 0 already minimizes the residual
        return Err(SolveError::Infeasible { min_residual: y_norm, eta });
    }

    let mut lambda = lambda0;
    let mut active: Vec<usize> = Vec::new();
    let mut signs: Vec<f64> = Vec::new();
    let mut blocked = vec![false; n];
    // a column that just left sits on the boundary it left from and may
    // only come back through the opposite one on the next segment
    let mut last_dropped: Option<(usize, f64)> = None;
    // a fresh entrant sits at zero and cannot leave on the same segment
    let mut last_entered: Option<usize> = None;
    let mut iterations = 0;
    let touch = |c: f64, lambda: f64| {
        if nonneg {
            c >= lambda * (1.0 - opts.tol)
        } else {
            c.abs() >= lambda * (1.0 - opts.tol)
        }
    };

    loop {
        // correlations at the current λ
        let (seg, corr) = if active.is_empty() {
            (None, c0.clone())
        } else {
            let seg = segment(a, y, &active, &signs, lambda)?;
            let corr = a.tr_mul_vec_unchecked(&seg.r);
            (Some(seg), corr)
        };

        // inactive columns already at the boundary enter before stepping
        let eligible = |j: usize| !blocked[j] && !active.contains(&j);
        let excluded = |j: usize, side: f64| last_dropped == Some((j, side));
        let immediate = (0..n)
            .filter(|&j| eligible(j) && touch(corr[j], lambda) && !excluded(j, corr[j].signum()))
            .max_by(|&i, &j| corr[i].abs().total_cmp(&corr[j].abs()).then(j.cmp(&i)));
        if let Some(j) = immediate {
            let mut trial = active.clone();
            trial.push(j);
            if full_rank(a, &trial) {
                active.push(j);
                signs.push(if corr[j] >= 0.0 { 1.0 } else { -1.0 });
                last_entered = Some(j);
            } else {
                blocked[j] = true;
            }
            continue;
        }

        if iterations >= max_iter {
            let x = scatter(n, &active, seg.as_ref().map(|s| s.x_s.as_slice()).unwrap_or(&[]));
            return Ok(finish(a, y, eta, x, &active, None, iterations, false, nonneg));
        }
        iterations += 1;

        let Some(seg) = seg else {
            // unreachable: the maximal correlation always touches λ₀
            return Err(SolveError::InvalidParameter("empty active set during homotopy".into()));
        };
        let av = a.tr_mul_vec_unchecked(&seg.v);

        let mut gamma = lambda;
        let mut event: Option<(bool, usize, f64)> = None; // (enters, index, sign)
        for j in 0..n {
            if !eligible(j) {
                continue;
            }
            let up = 1.0 - av[j];
            if up > 0.0 && !excluded(j, 1.0) {
                let g = ((lambda - corr[j]) / up).max(0.0);
                if g < gamma {
                    gamma = g;
                    event = Some((true, j, 1.0));
                }
            }
            if !nonneg {
                let down = 1.0 + av[j];
                if down > 0.0 && !excluded(j, -1.0) {
                    let g = ((lambda + corr[j]) / down).max(0.0);
                    if g < gamma {
                        gamma = g;
                        event = Some((true, j, -1.0));
                    }
                }
            }
        }
        for (k, (&xi, &di)) in seg.x_s.iter().zip(&seg.d).enumerate() {
            let sk = signs[k];
            if Some(active[k]) != last_entered && sk * di < 0.0 {
                let g = (sk * xi / (-sk * di)).max(0.0);
                if g < gamma {
                    gamma = g;
                    event = Some((false, k, 0.0));
                }
            }
        }

        if let Some(g) = crossing(&seg.r, &seg.v, eta, gamma).filter(|_| eta > 0.0) {
            let x_s: Vec<f64> = seg.x_s.iter().zip(&seg.d).map(|(x, d)| x + g * d).collect();
            let x = scatter(n, &active, &x_s);
            let nu: Vec<f64> = seg.r.iter().zip(&seg.v).map(|(r, v)| r - g * v).collect();
            let lam = lambda - g;
            let dual = if lam > 0.0 { Some(nu.iter().map(|t| t / lam).collect()) } else { None };
            return Ok(finish(a, y, eta, x, &active, dual, iterations, true, nonneg));
        }

        lambda -= gamma;
        match event {
            None => {
                // λ reached 0 on this segment: least squares on the active set
                let x_s: Vec<f64> = seg.x_s.iter().zip(&seg.d).map(|(x, d)| x + gamma * d).collect();
                let x = scatter(n, &active, &x_s);
                let r: Vec<f64> = seg.r.iter().zip(&seg.v).map(|(r, v)| r - gamma * v).collect();
                let res = l2(&r);
                if res > eta + feas_tol {
                    return Err(SolveError::Infeasible { min_residual: res, eta });
                }
                let out = finish(a, y, eta, x, &active, Some(seg.v.clone()), iterations, true, nonneg);
                return Ok(out);
            }
            Some((true, j, sign)) => {
                let mut trial = active.clone();
                trial.push(j);
                if full_rank(a, &trial) {
                    active.push(j);
                    signs.push(sign);
                    last_dropped = None;
                    last_entered = Some(j);
                } else {
                    blocked[j] = true;
                }
            }
            Some((false, k, _)) => {
                last_dropped = Some((active.remove(k), signs.remove(k)));
                last_entered = None;
                blocked.iter_mut().for_each(|b| *b = false);
            }
        }
        if lambda <= 0.0 {
            lambda = 0.0;
        }
    }
}

fn scatter(n: usize, active: &[usize], x_s: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (&j, &v) in active.iter().zip(x_s) {
        x[j] = v;
    }
    x
}

/// Builds the result; `dual` is a direction for the dual certificate, scaled
/// here to feasibility.
#[allow(clippy::too_many_arguments)]
fn finish(
    a: &DenseMatrix,
    y: &[f64],
    eta: f64,
    x: Vec<f64>,
    _active: &[usize],
    dual: Option<Vec<f64>>,
    iterations: usize,
    converged: bool,
    nonneg: bool,
) -> BpdnResult {
    let mut x = x;
    if nonneg {
        // path iterates keep their sign; only roundoff can cross zero
        x.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    let ax = a.mul_vec_unchecked(&x);
    let r: Vec<f64> = y.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let objective: f64 = x.iter().map(|v| v.abs()).sum();
    let nu = dual.unwrap_or_else(|| vec![0.0; y.len()]);
    let atnu = a.tr_mul_vec_unchecked(&nu);
    let bound = if nonneg {
        atnu.iter().copied().fold(0.0f64, f64::max)
    } else {
        atnu.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    };
    let scale = if bound > 1.0 { 1.0 / bound } else { 1.0 };
    let dual_value = scale * (nu.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() - eta * l2(&nu));
    BpdnResult {
        x: Vector::from_vec_unchecked(x),
        objective,
        constraint_slack: eta - l2(&r),
        duality_gap_estimate: objective - dual_value,
        iterations,
        converged,
    }
}
