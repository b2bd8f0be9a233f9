//! Random measurement ensembles and the sparse nonnegative signal model.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ndcore::{DenseMatrix, SeededRng, Vector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("Bernoulli parameter {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("sparsity {s} outside 1..={n}")]
    InvalidSparsity { s: usize, n: usize },
    #[error("dimensions must be positive (m = {m}, n = {n})")]
    EmptyDimensions { m: usize, n: usize },
    #[error("identity ensemble needs m = n (m = {m}, n = {n})")]
    NonSquareIdentity { m: usize, n: usize },
    #[error("noise level {0} must be nonnegative and finite")]
    InvalidSigma(f64),
    #[error("unknown ensemble `{0}`")]
    UnknownEnsemble(String),
}

/// Which random matrix family to draw from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnsembleKind {
    /// i.i.d. entries in {0, 1} with `Pr[1] = p`.
    Bernoulli01 { p: f64 },
    /// i.i.d. standard normal entries.
    Gaussian,
    /// The identity; a deterministic debugging ensemble.
    Identity,
}

impl EnsembleKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Bernoulli01 { .. } => "bernoulli01",
            Self::Gaussian => "gaussian",
            Self::Identity => "identity",
        }
    }

    pub fn bernoulli_p(&self) -> Option<f64> {
        match self {
            Self::Bernoulli01 { p } => Some(*p),
            _ => None,
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses the ensemble name alone; the Bernoulli parameter defaults to ½.
impl FromStr for EnsembleKind {
    type Err = MeasureError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bernoulli01" | "bernoulli" => Ok(Self::Bernoulli01 { p: 0.5 }),
            "gaussian" => Ok(Self::Gaussian),
            "identity" => Ok(Self::Identity),
            other => Err(MeasureError::UnknownEnsemble(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn generate(&self) -> Result<DenseMatrix, MeasureError> {
        let mut rng = SeededRng::new(self.seed);
        generate_with(self.kind, self.m, self.n, &mut rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    pub n: usize,
    pub s: usize,
    pub seed: u64,
}

impl SignalSpec {
    pub fn generate(&self) -> Result<Vector, MeasureError> {
        gen_sparse_nonneg(self.n, self.s, self.seed)
    }
}

fn check_dims(m: usize, n: usize) -> Result<(), MeasureError> {
    if m == 0 || n == 0 {
        return Err(MeasureError::EmptyDimensions { m, n });
    }
    Ok(())
}

pub(crate) fn generate_with(
    kind: EnsembleKind,
    m: usize,
    n: usize,
    rng: &mut SeededRng,
) -> Result<DenseMatrix, MeasureError> {
    check_dims(m, n)?;
    match kind {
        EnsembleKind::Bernoulli01 { p } => bernoulli_with(m, n, p, rng),
        EnsembleKind::Gaussian => Ok(DenseMatrix::from_fn(m, n, |_, _| rng.standard_normal())),
        EnsembleKind::Identity => {
            if m != n {
                return Err(MeasureError::NonSquareIdentity { m, n });
            }
            Ok(DenseMatrix::identity(n))
        }
    }
}

pub(crate) fn bernoulli_with(
    m: usize,
    n: usize,
    p: f64,
    rng: &mut SeededRng,
) -> Result<DenseMatrix, MeasureError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(MeasureError::InvalidProbability(p));
    }
    // entries are drawn in column-major order
    Ok(DenseMatrix::from_fn(m, n, |_, _| {
        if rng.bernoulli(p) {
            1.0
        } else {
            0.0
        }
    }))
}

/// `m × n` matrix of i.i.d. Bernoulli(`p`) entries in {0, 1}.
pub fn gen_bernoulli01(m: usize, n: usize, p: f64, seed: u64) -> Result<DenseMatrix, MeasureError> {
    check_dims(m, n)?;
    bernoulli_with(m, n, p, &mut SeededRng::new(seed))
}

/// `m × n` matrix of i.i.d. standard normal entries.
pub fn gen_gaussian(m: usize, n: usize, seed: u64) -> Result<DenseMatrix, MeasureError> {
    generate_with(EnsembleKind::Gaussian, m, n, &mut SeededRng::new(seed))
}

pub(crate) fn sparse_nonneg_with(n: usize, s: usize, rng: &mut SeededRng) -> Result<Vector, MeasureError> {
    if s == 0 || s > n {
        return Err(MeasureError::InvalidSparsity { s, n });
    }
    // the first s positions of a Fisher–Yates shuffle are a uniform s-subset
    let mut perm: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = i + rng.below(n - i);
        perm.swap(i, j);
    }
    let mut x = vec![0.0; n];
    for &idx in &perm[..s] {
        // |g| = 0 has probability zero, but keep the support size exact anyway
        let mut v = rng.standard_normal().abs();
        while v == 0.0 {
            v = rng.standard_normal().abs();
        }
        x[idx] = v;
    }
    Ok(Vector::from_vec_unchecked(x))
}

/// Nonnegative `s`-sparse vector: uniform random support, magnitudes `|g|`
/// with `g` standard normal.
pub fn gen_sparse_nonneg(n: usize, s: usize, seed: u64) -> Result<Vector, MeasureError> {
    sparse_nonneg_with(n, s, &mut SeededRng::new(seed))
}

pub(crate) fn noise_with(m: usize, sigma: f64, rng: &mut SeededRng) -> Result<Vector, MeasureError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(MeasureError::InvalidSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(Vector::zeros(m));
    }
    Ok(Vector::from_vec_unchecked(
        (0..m).map(|_| sigma * rng.standard_normal()).collect(),
    ))
}

/// i.i.d. `N(0, sigma²)` noise vector.
pub fn gen_noise(m: usize, sigma: f64, seed: u64) -> Result<Vector, MeasureError> {
    noise_with(m, sigma, &mut SeededRng::new(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_extremes() {
        let zeros = gen_bernoulli01(4, 5, 0.0, 1).unwrap();
        assert!(zeros.data().iter().all(|&v| v == 0.0));
        let ones = gen_bernoulli01(4, 5, 1.0, 1).unwrap();
        assert!(ones.data().iter().all(|&v| v == 1.0));
        assert_eq!(gen_bernoulli01(2, 2, 1.5, 0), Err(MeasureError::InvalidProbability(1.5)));
        assert!(gen_bernoulli01(2, 2, -0.1, 0).is_err());
    }

    #[test]
    fn bernoulli_half_mean() {
        let a = gen_bernoulli01(100, 100, 0.5, 11).unwrap();
        let mean = a.data().iter().sum::<f64>() / 1e4;
        assert!((mean - 0.5).abs() <= 3.0 * (0.25f64 / 1e4).sqrt(), "mean {mean}");
    }

    #[test]
    fn bernoulli_row_means_concentrate() {
        let (m, n, p) = (50, 400, 0.3);
        let a = gen_bernoulli01(m, n, p, 5).unwrap();
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        for i in 0..m {
            let mean = a.row(i).iter().sum::<f64>() / n as f64;
            assert!((mean - p).abs() < 5.0 * sd, "row {i}: {mean}");
        }
    }

    #[test]
    fn gaussian_moments() {
        let a = gen_gaussian(100, 100, 3).unwrap();
        let n = 1e4;
        let mean = a.data().iter().sum::<f64>() / n;
        let var = a.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 4.0 / n.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() <= 0.1, "var {var}");
        assert_eq!(a, gen_gaussian(100, 100, 3).unwrap());
        assert_ne!(a, gen_gaussian(100, 100, 4).unwrap());
    }

    #[test]
    fn sparse_signal_shape() {
        let dense = gen_sparse_nonneg(6, 6, 9).unwrap();
        assert!(dense.iter().all(|&v| v > 0.0));
        for seed in 0..200 {
            let x = gen_sparse_nonneg(30, 4, seed).unwrap();
            assert_eq!(x.iter().filter(|&&v| v != 0.0).count(), 4);
            assert!(x.iter().all(|&v| v >= 0.0));
        }
        assert_eq!(gen_sparse_nonneg(3, 4, 0), Err(MeasureError::InvalidSparsity { s: 4, n: 3 }));
        assert!(gen_sparse_nonneg(3, 0, 0).is_err());
    }

    #[test]
    fn singleton_support_is_uniform() {
        let draws = 10_000;
        let mut counts = [0usize; 10];
        for seed in 0..draws {
            let x = gen_sparse_nonneg(10, 1, seed).unwrap();
            let idx = x.iter().position(|&v| v > 0.0).unwrap();
            counts[idx] += 1;
        }
        let sigma = (draws as f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!((c as f64 - 1000.0).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn pair_supports_pass_chi_square() {
        // n = 5, s = 2: ten equally likely supports
        let draws = 20_000u64;
        let mut counts = std::collections::BTreeMap::new();
        for seed in 0..draws {
            let x = gen_sparse_nonneg(5, 2, 1_000_000 + seed).unwrap();
            let support: Vec<usize> = (0..5).filter(|&i| x[i] > 0.0).collect();
            *counts.entry(support).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 10);
        let expected = draws as f64 / 10.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 99.9% quantile of chi-square with 9 degrees of freedom
        assert!(chi2 < 27.88, "chi2 = {chi2}");
    }

    #[test]
    fn noise_moments() {
        assert!(gen_noise(7, 0.0, 1).unwrap().iter().all(|&v| v == 0.0));
        let (m, sigma, draws) = (20usize, 0.3, 1000u64);
        let energies: Vec<f64> = (0..draws)
            .map(|seed| gen_noise(m, sigma, seed).unwrap().iter().map(|v| v * v).sum())
            .collect();
        let mean = energies.iter().sum::<f64>() / draws as f64;
        // Var ‖e‖² = 2 m sigma⁴
        let sd_of_mean = (2.0 * m as f64 * sigma.powi(4) / draws as f64).sqrt();
        assert!((mean - m as f64 * sigma * sigma).abs() <= 4.0 * sd_of_mean, "{mean}");
        assert_eq!(gen_noise(5, 1.0, 8), gen_noise(5, 1.0, 8));
        assert!(gen_noise(5, -1.0, 8).is_err());
    }

    #[test]
    fn identity_ensemble() {
        let spec = EnsembleSpec { kind: EnsembleKind::Identity, m: 3, n: 3, seed: 0 };
        assert_eq!(spec.generate().unwrap(), DenseMatrix::identity(3));
        let bad = EnsembleSpec { m: 2, ..spec };
        assert!(bad.generate().is_err());
        assert_eq!("gaussian".parse::<EnsembleKind>().unwrap(), EnsembleKind::Gaussian);
        assert!("fourier".parse::<EnsembleKind>().is_err());
    }
}
