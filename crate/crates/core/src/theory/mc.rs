use rayon::prelude::*;

use crate::ndcore::{l2, DenseMatrix, SeededRng};
use crate::nsp::{head_tail, t_margin};

use super::{check_unit, default_t_dev, default_xi, small_ball_rhs, TheoryError};

/// Draws per work unit. Chunk `c` always uses the stream `child(seed, c)`, so
/// results do not depend on the thread count.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub trials: usize,
    pub seed: u64,
    pub confidence_sigmas: f64,
}

impl McSettings {
    pub fn new(trials: usize, seed: u64) -> Result<Self, TheoryError> {
        if trials == 0 {
            return Err(TheoryError::InvalidParameter("trials must be at least 1".into()));
        }
        Ok(Self { trials, seed, confidence_sigmas: 4.0 })
    }
}

/// A Monte-Carlo mean with its standard error `√(v̂/trials)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub estimate: f64,
    pub std_err: f64,
    pub trials: usize,
}

impl MonteCarlo {
    fn from_sums(sum: f64, sum_sq: f64, trials: usize) -> Self {
        let n = trials as f64;
        let mean = sum / n;
        let var = if trials > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        Self { estimate: mean, std_err: (var / n).sqrt(), trials }
    }

    /// `|estimate − reference| ≤ sigmas·std_err`.
    pub fn within(&self, reference: f64, sigmas: f64) -> bool {
        (self.estimate - reference).abs() <= sigmas * self.std_err
    }

    /// `estimate ≥ reference − sigmas·std_err`.
    pub fn at_least(&self, reference: f64, sigmas: f64) -> bool {
        self.estimate >= reference - sigmas * self.std_err
    }
}

fn chunks(trials: usize) -> Vec<(u64, usize)> {
    (0..trials.div_ceil(CHUNK))
        .map(|c| (c as u64, CHUNK.min(trials - c * CHUNK)))
        .collect()
}

/// Runs `body(rng, count)` per chunk in parallel and returns the partial
/// results in chunk order.
fn run_chunked<T, F>(trials: usize, seed: u64, body: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SeededRng, usize) -> T + Sync,
{
    chunks(trials)
        .into_par_iter()
        .map(|(c, count)| body(&mut SeededRng::child(seed, c), count))
        .collect()
}

fn bernoulli_dot(rng: &mut SeededRng, z: &[f64], p: f64) -> f64 {
    z.iter().filter(|_| rng.bernoulli(p)).sum()
}

/// Empirical `Pr[|⟨a, z⟩| ≥ θ√(p(1−p))]` for each `θ` in `thetas`, sharing
/// the same draws of `a`.
pub fn mc_tail_multi(z: &[f64], p: f64, thetas: &[f64], settings: &McSettings) -> Result<Vec<MonteCarlo>, TheoryError> {
    check_unit(z)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(TheoryError::InvalidProbability(p));
    }
    let scale = (p * (1.0 - p)).sqrt();
    let levels: Vec<f64> = thetas.iter().map(|t| t * scale).collect();
    let parts = run_chunked(settings.trials, settings.seed, |rng, count| {
        let mut hits = vec![0usize; levels.len()];
        for _ in 0..count {
            let d = bernoulli_dot(rng, z, p).abs();
            for (h, &lvl) in hits.iter_mut().zip(&levels) {
                if d >= lvl {
                    *h += 1;
                }
            }
        }
        hits
    });
    let mut total = vec![0usize; levels.len()];
    for part in parts {
        for (t, h) in total.iter_mut().zip(part) {
            *t += h;
        }
    }
    Ok(total
        .into_iter()
        .map(|h| MonteCarlo::from_sums(h as f64, h as f64, settings.trials))
        .collect())
}

pub fn mc_tail(z: &[f64], p: f64, theta_arg: f64, settings: &McSettings) -> Result<MonteCarlo, TheoryError> {
    Ok(mc_tail_multi(z, p, &[theta_arg], settings)?[0])
}

/// Empirical variance of `S = ⟨a, z⟩²` with its standard error
/// `√((μ̂₄ − v̂²)/trials)`.
pub fn mc_variance(z: &[f64], p: f64, settings: &McSettings) -> Result<MonteCarlo, TheoryError> {
    check_unit(z)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(TheoryError::InvalidProbability(p));
    }
    let parts = run_chunked(settings.trials, settings.seed, |rng, count| {
        let mut sums = [0.0f64; 4];
        for _ in 0..count {
            let d = bernoulli_dot(rng, z, p);
            let s = d * d;
            sums[0] += s;
            sums[1] += s * s;
            sums[2] += s * s * s;
            sums[3] += s * s * s * s;
        }
        sums
    });
    let mut raw = [0.0f64; 4];
    for part in parts {
        for (r, v) in raw.iter_mut().zip(part) {
            *r += v;
        }
    }
    let n = settings.trials as f64;
    let [m1, m2, m3, m4] = raw.map(|v| v / n);
    let var = (m2 - m1 * m1).max(0.0);
    let mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
    let var_unbiased = if settings.trials > 1 { var * n / (n - 1.0) } else { 0.0 };
    Ok(MonteCarlo {
        estimate: var_unbiased,
        std_err: ((mu4 - var * var).max(0.0) / n).sqrt(),
        trials: settings.trials,
    })
}

/// `sup ⟨h, u⟩` over `s`-sparse unit `u`: the ℓ2 norm of the `s` largest
/// magnitudes of `h`.
pub fn top_s_energy(h: &[f64], s: usize) -> f64 {
    head_tail(h, s).0
}

/// Mean empirical width of the `s`-sparse unit sphere: the mean of
/// `sup ⟨h, u⟩` with `h = (1/√m)Σ_k ε_k a_k`, `ε_k` Rademacher and `a_k`
/// Bernoulli(`p`) rows.
pub fn mc_wm(n: usize, s: usize, p: f64, m: usize, settings: &McSettings) -> Result<MonteCarlo, TheoryError> {
    if s == 0 || s > n || m == 0 {
        return Err(TheoryError::InvalidParameter(format!("need 1 ≤ s ≤ n and m ≥ 1 (n = {n}, s = {s}, m = {m})")));
    }
    let inv = 1.0 / (m as f64).sqrt();
    let parts = run_chunked(settings.trials, settings.seed, |rng, count| {
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        let mut h = vec![0.0; n];
        for _ in 0..count {
            h.iter_mut().for_each(|v| *v = 0.0);
            for _ in 0..m {
                let eps = rng.rademacher();
                for v in h.iter_mut() {
                    if rng.bernoulli(p) {
                        *v += eps;
                    }
                }
            }
            let sup = top_s_energy(&h, s) * inv;
            sum += sup;
            sum_sq += sup * sup;
        }
        (sum, sum_sq)
    });
    let (sum, sum_sq) = parts.into_iter().fold((0.0, 0.0), |acc, (a, b)| (acc.0 + a, acc.1 + b));
    Ok(MonteCarlo::from_sums(sum, sum_sq, settings.trials))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallBallCheck {
    /// Closed-form lower bound on `inf_T ‖Av‖₂` at `ξ`, `t`.
    pub bound: f64,
    /// Minimum of `‖Av‖₂` over the sampled members of `T_{ρ,s}`.
    pub empirical_min: f64,
    pub members: usize,
}

/// Samples `A` (`m×n`, Bernoulli(`p`)) and `trials` members of `T_{ρ,s}`,
/// and pairs the closed-form small-ball bound with the empirical minimum of
/// `‖Av‖₂`. `xi` and `t_dev` default to `ξ₀`, `t₀`.
#[allow(clippy::too_many_arguments)]
pub fn mc_small_ball_rhs(
    n: usize,
    m: usize,
    p: f64,
    rho: f64,
    s: usize,
    xi: Option<f64>,
    t_dev: Option<f64>,
    settings: &McSettings,
) -> Result<SmallBallCheck, TheoryError> {
    let bound = small_ball_rhs(
        n,
        m,
        s,
        p,
        rho,
        xi.unwrap_or_else(|| default_xi(p)),
        t_dev.unwrap_or_else(|| default_t_dev(p, m)),
    )?;
    let a = crate::measure::gen_bernoulli01(m, n, p, settings.seed)
        .map_err(|e| TheoryError::InvalidParameter(e.to_string()))?;
    let member_seed = crate::ndcore::derive_seed(settings.seed, 1);
    let mins = run_chunked(settings.trials, member_seed, |rng, count| chunk_min(&a, rho, s, rng, count));
    let empirical_min = mins.into_iter().fold(f64::INFINITY, f64::min);
    Ok(SmallBallCheck { bound, empirical_min, members: settings.trials })
}

fn chunk_min(a: &DenseMatrix, rho: f64, s: usize, rng: &mut SeededRng, count: usize) -> f64 {
    let n = a.cols();
    let mut best = f64::INFINITY;
    let mut found = 0;
    while found < count {
        // s-sparse core plus a small dense perturbation, rejected unless in T
        let mut v: Vec<f64> = (0..n).map(|_| 0.05 * rng.standard_normal()).collect();
        for _ in 0..s {
            v[rng.below(n)] += rng.standard_normal();
        }
        let norm = l2(&v);
        if norm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        if t_margin(&v, rho, s) <= 0.0 {
            continue;
        }
        found += 1;
        best = best.min(l2(&a.mul_vec_unchecked(&v)));
    }
    best
}
