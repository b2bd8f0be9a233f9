use crate::ndcore::{DenseMatrix, LinalgError, QrFactor, Vector};

use super::SolveError;

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsResult {
    pub x: Vector,
    pub residual_norm: f64,
    /// Outer (variable-entering) iterations.
    pub iterations: usize,
    /// Indices with `x_i > 0`, ascending.
    pub active_set: Vec<usize>,
    /// Whether the KKT conditions held at exit within the tolerance.
    pub converged: bool,
    /// Largest positive entry of `Aᵀ(y − Ax)` outside the active set at exit.
    pub kkt_violation: f64,
    /// Times a candidate column was rejected because it made the passive
    /// least-squares subproblem degenerate.
    pub degenerate_rejections: usize,
}

/// NNLS with the default tolerance `1e-10·‖Aᵀy‖∞` and `10·n` iterations.
pub fn nnls_default(a: &DenseMatrix, y: &[f64]) -> Result<NnlsResult, SolveError> {
    nnls(a, y, None, None)
}

/// Lawson–Hanson active-set solver for `min ‖Az − y‖₂ s.t. z ≥ 0`.
///
/// The passive least-squares problem is re-solved from scratch by Householder
/// QR each time the passive set changes. Entering-variable ties go to the
/// lowest index. A column that makes the passive set rank deficient is
/// skipped until the next successful update.
pub fn nnls(
    a: &DenseMatrix,
    y: &[f64],
    tol: Option<f64>,
    max_iter: Option<usize>,
) -> Result<NnlsResult, SolveError> {
    let (m, n) = (a.rows(), a.cols());
    if y.len() != m {
        return Err(LinalgError::DimensionMismatch { expected: m, found: y.len() }.into());
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::InvalidParameter("y has non-finite entries".into()));
    }
    let aty = a.tr_mul_vec_unchecked(y);
    let scale = aty.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = tol.unwrap_or(1e-10 * scale);
    let max_iter = max_iter.unwrap_or(10 * n);

    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let mut blocked = vec![false; n];
    let mut iterations = 0;
    let mut degenerate_rejections = 0;
    let mut converged = false;
    let mut w = aty.clone();

    loop {
        let candidate = (0..n)
            .filter(|&j| !passive[j] && !blocked[j])
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if w[b] >= w[j] => Some(b),
                _ => Some(j),
            });
        let j = match candidate {
            Some(j) if w[j] > tol => j,
            _ => {
                converged = true;
                break;
            }
        };
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        passive[j] = true;

        let mut first_pass = true;
        loop {
            let cols: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let z = match QrFactor::new(&a.select_columns(&cols)).and_then(|f| f.solve(y)) {
                Ok(z) => z,
                Err(LinalgError::RankDeficient { .. }) if first_pass => {
                    passive[j] = false;
                    blocked[j] = true;
                    degenerate_rejections += 1;
                    break;
                }
                Err(e) => return Err(e.into()),
            };
            if first_pass {
                let pos = cols.iter().position(|&c| c == j).expect("entering column is passive");
                if z[pos] <= 0.0 {
                    // cannot happen in exact arithmetic; treat as degenerate
                    passive[j] = false;
                    blocked[j] = true;
                    degenerate_rejections += 1;
                    break;
                }
                first_pass = false;
            }
            if z.iter().all(|&v| v > 0.0) {
                for (k, &c) in cols.iter().enumerate() {
                    x[c] = z[k];
                }
                blocked.iter_mut().for_each(|b| *b = false);
                break;
            }
            // step from x toward z until the first passive coordinate hits zero
            let mut alpha = f64::INFINITY;
            let mut hit = Vec::new();
            for (k, &c) in cols.iter().enumerate() {
                if z[k] <= 0.0 {
                    let ratio = x[c] / (x[c] - z[k]);
                    if ratio < alpha {
                        alpha = ratio;
                        hit.clear();
                        hit.push(c);
                    } else if ratio == alpha {
                        hit.push(c);
                    }
                }
            }
            for (k, &c) in cols.iter().enumerate() {
                x[c] += alpha * (z[k] - x[c]);
            }
            for &c in &hit {
                x[c] = 0.0;
            }
            for &c in &cols {
                if x[c] <= 0.0 {
                    x[c] = 0.0;
                    passive[c] = false;
                }
            }
        }
        let ax = a.mul_vec_unchecked(&x);
        let r: Vec<f64> = y.iter().zip(&ax).map(|(yi, ai)| yi - ai).collect();
        w = a.tr_mul_vec_unchecked(&r);
    }

    let ax = a.mul_vec_unchecked(&x);
    let residual_norm = crate::ndcore::Vector::from_vec_unchecked(
        y.iter().zip(&ax).map(|(yi, ai)| yi - ai).collect(),
    )
    .norm2();
    let kkt_violation = (0..n)
        .filter(|&i| x[i] == 0.0)
        .map(|i| w[i])
        .fold(0.0f64, f64::max);
    let active_set = (0..n).filter(|&i| x[i] > 0.0).collect();
    Ok(NnlsResult {
        x: Vector::from_vec_unchecked(x),
        residual_norm,
        iterations,
        active_set,
        converged,
        kkt_violation,
        degenerate_rejections,
    })
}

/// `argmin_{z ≥ 0} ‖z‖₁² + λ²‖Az − y‖₂²`.
///
/// On the nonnegative orthant `‖z‖₁ = ⟨1, z⟩`, so the program is exactly
/// NNLS on `[1ᵀ; λA] z ≈ [0; λy]`.
pub fn l1sq_nnreg(a: &DenseMatrix, y: &[f64], lambda: f64) -> Result<NnlsResult, SolveError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SolveError::InvalidParameter(format!("lambda = {lambda} must be positive")));
    }
    if y.len() != a.rows() {
        return Err(LinalgError::DimensionMismatch { expected: a.rows(), found: y.len() }.into());
    }
    let ones = DenseMatrix::new(1, a.cols(), vec![1.0; a.cols()])?;
    let augmented = ones.vstack(&a.scale(lambda))?;
    let mut rhs = Vec::with_capacity(y.len() + 1);
    rhs.push(0.0);
    rhs.extend(y.iter().map(|v| lambda * v));
    nnls(&augmented, &rhs, None, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{gen_bernoulli01, gen_gaussian, gen_sparse_nonneg};
    use crate::ndcore::{ls_solve, SeededRng};

    #[test]
    fn identity_clamps_negative_entries() {
        let r = nnls_default(&DenseMatrix::identity(3), &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(r.x.as_slice(), &[1.0, 0.0, 3.0]);
        assert_eq!(r.active_set, vec![0, 2]);
        assert!(r.converged);
        assert!((r.residual_norm - 2.0).abs() < 1e-14);
    }

    #[test]
    fn recovers_sparse_nonnegative_signal() {
        let a = gen_bernoulli01(40, 20, 0.5, 17).unwrap();
        let x0 = gen_sparse_nonneg(20, 3, 18).unwrap();
        let y = a.mul_vec(&x0).unwrap();
        let r = nnls_default(&a, &y).unwrap();
        let err: f64 = r.x.iter().zip(x0.iter()).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-6 * x0.norm2(), "err {err}");
        assert!(r.residual_norm < 1e-9);
    }

    #[test]
    fn kkt_holds_at_exit() {
        for seed in 0..30 {
            let a = gen_gaussian(15, 25, seed).unwrap();
            let mut rng = SeededRng::new(seed + 99);
            let y: Vec<f64> = (0..15).map(|_| rng.standard_normal()).collect();
            let r = nnls_default(&a, &y).unwrap();
            assert!(r.converged);
            let ax = a.mul_vec(&r.x).unwrap();
            let res: Vec<f64> = ax.iter().zip(&y).map(|(p, q)| p - q).collect();
            let grad = a.tr_mul_vec(&res).unwrap();
            let tol = 1e-8;
            for i in 0..25 {
                assert!(r.x[i] >= 0.0);
                if r.active_set.contains(&i) {
                    assert!(grad[i].abs() <= tol, "seed {seed} i {i} grad {}", grad[i]);
                } else {
                    assert!(grad[i] >= -tol);
                }
            }
        }
    }

    #[test]
    fn zero_columns_stay_inactive() {
        let a = DenseMatrix::from_row_major(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let r = nnls_default(&a, &[2.0, 3.0]).unwrap();
        assert_eq!(r.x.as_slice(), &[2.0, 0.0, 3.0]);
    }

    #[test]
    fn duplicate_columns_do_not_break_the_solver() {
        let a = DenseMatrix::from_row_major(3, 3, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let y = [2.0, 1.0, 3.0];
        let r = nnls_default(&a, &y).unwrap();
        assert!(r.converged);
        assert!(r.residual_norm < 1e-10);
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let a = gen_gaussian(10, 10, 4).unwrap();
        let y = a.mul_vec(&[1.0; 10]).unwrap();
        let r = nnls(&a, &y, None, Some(2)).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
        assert!(r.x.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(nnls_default(&DenseMatrix::identity(2), &[1.0]).is_err());
    }

    #[test]
    fn l1sq_is_nnls_on_the_augmented_system() {
        let a = gen_gaussian(5, 8, 2).unwrap();
        let y = gen_gaussian(5, 1, 3).unwrap().data().to_vec();
        let lambda = 100.0;
        let z = l1sq_nnreg(&a, &y, lambda).unwrap();
        let objective = |v: &[f64]| {
            let l1: f64 = v.iter().sum();
            let r: f64 = a.mul_vec(v).unwrap().iter().zip(&y).map(|(p, q)| (p - q).powi(2)).sum();
            l1 * l1 + lambda * lambda * r
        };
        let f0 = objective(&z.x);
        // the squared augmented residual is the program's objective
        assert!((z.residual_norm.powi(2) - f0).abs() <= 1e-9 * f0.max(1.0));
        let mut rng = SeededRng::new(5);
        for _ in 0..100 {
            let probe: Vec<f64> = z
                .x
                .iter()
                .map(|&v| (v + 1e-3 * rng.standard_normal()).max(0.0))
                .collect();
            assert!(objective(&probe) >= f0 - 1e-9 * f0);
        }
    }

    #[test]
    fn l1sq_of_zero_data_is_zero() {
        let a = gen_gaussian(4, 6, 1).unwrap();
        let z = l1sq_nnreg(&a, &[0.0; 4], 3.0).unwrap();
        assert!(z.x.iter().all(|&v| v == 0.0));
        assert!(l1sq_nnreg(&a, &[0.0; 4], 0.0).is_err());
    }

    #[test]
    fn ls_solve_is_used_consistently() {
        // a full-rank square nonnegative solution is simply the linear solve
        let a = DenseMatrix::from_row_major(2, 2, &[2.0, 1.0, 1.0, 3.0]).unwrap();
        let y = [3.0, 4.0];
        let direct = ls_solve(&a, &y).unwrap();
        let r = nnls_default(&a, &y).unwrap();
        for (u, v) in r.x.iter().zip(direct.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
