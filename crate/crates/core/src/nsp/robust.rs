use rayon::prelude::*;

use crate::measure::sparse_nonneg_with;
use crate::ndcore::{l2, DenseMatrix, SeededRng, Vector};

use super::{check_rho, t_margin, NspError, NspMethod, NspReport, NspStatus};

/// Below this `q̂` a witness counts as a (numerical) kernel vector.
const KERNEL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct RobustNspOptions {
    pub restarts: usize,
    pub steps: usize,
    /// Weight of the squared exit penalty.
    pub penalty: f64,
    pub seed: u64,
    /// Grid spacing on the cube surface; `None` picks `1e-2` for `n ≤ 3`
    /// and `2.5e-2` for `n = 4`.
    pub grid_resolution: Option<f64>,
    /// Largest `n` for which the grid replaces the search.
    pub grid_max_n: usize,
}

impl Default for RobustNspOptions {
    fn default() -> Self {
        Self { restarts: 50, steps: 500, penalty: 1e3, seed: 0, grid_resolution: None, grid_max_n: 4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Smallest `‖Av‖₂` seen at a point of `T_{ρ,s}`.
    pub value: f64,
    pub witness: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    /// Smallest `‖Av‖₂` over grid points of `T_{ρ,s}`.
    pub value: f64,
    pub witness: Vector,
    /// Valid lower bound on `inf_T ‖Av‖₂`.
    pub certified_lower: f64,
    pub points: usize,
}

struct Objective<'a> {
    a: &'a DenseMatrix,
    gram: DenseMatrix,
    rho: f64,
    coef: f64,
    s: usize,
    penalty: f64,
}

impl Objective<'_> {
    /// `‖Av‖² + P·max(0, −margin)²`, its Euclidean gradient, and the margin.
    fn eval(&self, v: &[f64]) -> (f64, Vec<f64>, f64) {
        let av = self.a.mul_vec_unchecked(v);
        let fit: f64 = av.iter().map(|x| x * x).sum();
        let mut grad: Vec<f64> = self.gram.mul_vec_unchecked(v).iter().map(|g| 2.0 * g).collect();
        let margin = t_margin(v, self.rho, self.s);
        let mut f = fit;
        if margin < 0.0 {
            let viol = -margin;
            f += self.penalty * viol * viol;
            // subgradient of (ρ/√s)‖v_c‖₁ − ‖v_s‖₂
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
            let head: f64 = idx[..self.s].iter().map(|&i| v[i] * v[i]).sum::<f64>().sqrt();
            for (rank, &i) in idx.iter().enumerate() {
                let d = if rank < self.s {
                    if head > 0.0 { -v[i] / head } else { 0.0 }
                } else {
                    self.coef * v[i].signum()
                };
                grad[i] += 2.0 * self.penalty * viol * d;
            }
        }
        (f, grad, margin)
    }
}

fn normalize(v: &mut [f64]) {
    let n = l2(v);
    v.iter_mut().for_each(|x| *x /= n);
}

fn random_sparse_unit(n: usize, s: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut v = sparse_nonneg_with(n, s, rng).expect("1 ≤ s ≤ n").into_inner();
    for x in v.iter_mut() {
        *x *= rng.rademacher();
    }
    normalize(&mut v);
    v
}

/// One projected-gradient descent on the sphere; returns the best in-`T`
/// `(‖Av‖, v)` seen.
fn descend(obj: &Objective<'_>, mut v: Vec<f64>, steps: usize) -> Option<(f64, Vec<f64>)> {
    let fit = |v: &[f64]| l2(&obj.a.mul_vec_unchecked(v));
    let mut best: Option<(f64, Vec<f64>)> = None;
    let record = |v: &[f64], margin: f64, best: &mut Option<(f64, Vec<f64>)>| {
        if margin > 0.0 {
            let q = fit(v);
            if best.as_ref().is_none_or(|(b, _)| q < *b) {
                *best = Some((q, v.to_vec()));
            }
        }
    };
    let (mut f, mut grad, margin) = obj.eval(&v);
    record(&v, margin, &mut best);
    let mut alpha = 0.1;
    for _ in 0..steps {
        // Riemannian gradient: drop the radial part
        let radial: f64 = grad.iter().zip(&v).map(|(g, x)| g * x).sum();
        let rg: Vec<f64> = grad.iter().zip(&v).map(|(g, x)| g - radial * x).collect();
        let rg2: f64 = rg.iter().map(|x| x * x).sum();
        if rg2 < 1e-24 {
            break;
        }
        alpha *= 2.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut cand: Vec<f64> = v.iter().zip(&rg).map(|(x, g)| x - alpha * g).collect();
            normalize(&mut cand);
            let (fc, gc, mc) = obj.eval(&cand);
            record(&cand, mc, &mut best);
            if fc <= f - 1e-4 * alpha * rg2 {
                v = cand;
                f = fc;
                grad = gc;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    best
}

/// Multi-start minimization of `‖Av‖₂` over `T_{ρ,s}`.
///
/// Every basis vector is scored first; then each restart descends from a
/// random `s`-sparse unit vector drawn from child stream `k` of `seed`. The
/// result is an upper bound on the infimum and does not depend on the number
/// of worker threads.
pub fn sphere_search(a: &DenseMatrix, rho: f64, s: usize, opts: &RobustNspOptions) -> Result<SearchOutcome, NspError> {
    check_rho(rho)?;
    let n = a.cols();
    if s == 0 || s > n {
        return Err(NspError::InvalidParameter(format!("s = {s} outside 1..={n}")));
    }
    let obj = Objective {
        a,
        gram: a.gram(),
        rho,
        coef: rho / (s as f64).sqrt(),
        s,
        penalty: opts.penalty,
    };
    let mut best: (f64, Vec<f64>) = (f64::INFINITY, vec![0.0; n]);
    for j in 0..n {
        let e = Vector::basis(n, j).into_inner();
        let q = l2(a.col(j));
        if q < best.0 {
            best = (q, e);
        }
    }
    let runs: Vec<Option<(f64, Vec<f64>)>> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = SeededRng::child(opts.seed, k as u64);
            let start = random_sparse_unit(n, s, &mut rng);
            descend(&obj, start, opts.steps)
        })
        .collect();
    for (q, v) in runs.into_iter().flatten() {
        if q < best.0 {
            best = (q, v);
        }
    }
    Ok(SearchOutcome { value: best.0, witness: Vector::from_vec_unchecked(best.1) })
}

/// Exhaustive search over the normalized surface grid of `[−1, 1]ⁿ`.
///
/// Every unit vector lies within `δ = h√(n−1)/2` of a normalized grid point,
/// `‖Av‖` is `‖A‖_F`-Lipschitz and the `T` margin is
/// `(1 + (ρ/√s)√(n−s))`-Lipschitz, which yields `certified_lower`.
pub fn sphere_grid(a: &DenseMatrix, rho: f64, s: usize, resolution: f64) -> Result<GridOutcome, NspError> {
    check_rho(rho)?;
    let n = a.cols();
    if s == 0 || s > n {
        return Err(NspError::InvalidParameter(format!("s = {s} outside 1..={n}")));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(NspError::InvalidParameter(format!("grid resolution {resolution} outside (0, 1]")));
    }
    // an even count puts the basis vectors on the grid
    let k = 2 * (1.0 / resolution).ceil() as usize;
    let h = 2.0 / k as f64;
    let delta = h * ((n - 1) as f64).sqrt() / 2.0;
    let lip = 1.0 + rho / (s as f64).sqrt() * ((n - s) as f64).sqrt();
    let slack = lip * delta;
    let face_points = (k + 1).pow((n - 1) as u32);

    // (face, first free coordinate) slices are independent
    let slices: Vec<(usize, usize)> = (0..2 * n).flat_map(|f| (0..=k).map(move |i| (f, i))).collect();
    let partial: Vec<(f64, usize, f64, usize)> = slices
        .par_iter()
        .map(|&(face, first)| {
            let axis = face / 2;
            let sign = if face % 2 == 0 { 1.0 } else { -1.0 };
            let mut best_in = (f64::INFINITY, usize::MAX);
            let mut best_near = f64::INFINITY;
            let rest = if n == 1 { usize::from(first == 0) } else { face_points / (k + 1) };
            let mut v = vec![0.0; n];
            for r in 0..rest {
                let mut code = first * rest + r;
                for (c, slot) in v.iter_mut().enumerate() {
                    if c == axis {
                        *slot = sign;
                    } else {
                        *slot = -1.0 + h * (code % (k + 1)) as f64;
                        code /= k + 1;
                    }
                }
                normalize(&mut v);
                let margin = t_margin(&v, rho, s);
                if margin > -slack {
                    let q = l2(&a.mul_vec_unchecked(&v));
                    best_near = best_near.min(q);
                    if margin > 0.0 && q < best_in.0 {
                        best_in = (q, first * rest + r);
                    }
                }
            }
            (best_in.0, best_in.1, best_near, face)
        })
        .collect();
    let mut value = f64::INFINITY;
    let mut arg = (0usize, usize::MAX);
    let mut near = f64::INFINITY;
    for &(q, code, qn, face) in &partial {
        if q < value {
            value = q;
            arg = (face, code);
        }
        near = near.min(qn);
    }
    let witness = decode(n, k, h, arg.0, arg.1);
    Ok(GridOutcome {
        value,
        witness: Vector::from_vec_unchecked(witness),
        certified_lower: near - a.frobenius_norm() * delta,
        points: 2 * n * face_points,
    })
}

fn decode(n: usize, k: usize, h: f64, face: usize, code: usize) -> Vec<f64> {
    if code == usize::MAX {
        return vec![0.0; n];
    }
    let axis = face / 2;
    let sign = if face.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut code = code;
    let mut v = vec![0.0; n];
    for (c, slot) in v.iter_mut().enumerate() {
        if c == axis {
            *slot = sign;
        } else {
            *slot = -1.0 + h * (code % (k + 1)) as f64;
            code /= k + 1;
        }
    }
    normalize(&mut v);
    v
}

/// Estimates `inf{‖Av‖₂ : v ∈ T_{ρ,s}}` and reports `τ̂ = 1/q̂`.
///
/// For `n ≤ grid_max_n` the exhaustive grid replaces the search and the
/// status is `Holds` when the certified lower bound is positive. Otherwise
/// the status is `Fails` when a near-kernel witness is found and
/// `EvidenceOnly` else.
pub fn estimate_robust_nsp(a: &DenseMatrix, rho: f64, s: usize, opts: &RobustNspOptions) -> Result<NspReport, NspError> {
    let n = a.cols();
    let (method, value, witness, certified_lower) = if n <= opts.grid_max_n {
        let h = opts.grid_resolution.unwrap_or(if n <= 3 { 1e-2 } else { 2.5e-2 });
        let g = sphere_grid(a, rho, s, h)?;
        (NspMethod::GridL2, g.value, g.witness, Some(g.certified_lower))
    } else {
        let r = sphere_search(a, rho, s, opts)?;
        (NspMethod::RandomizedL2, r.value, r.witness, None)
    };
    let status = if value <= KERNEL_TOL {
        NspStatus::Fails
    } else if certified_lower.is_some_and(|l| l > 0.0) {
        NspStatus::Holds
    } else {
        NspStatus::EvidenceOnly
    };
    Ok(NspReport {
        s,
        rho,
        tau_estimate: (value > 0.0).then(|| 1.0 / value),
        method,
        status,
        witness: Some(witness),
        value,
        certified_lower,
    })
}
