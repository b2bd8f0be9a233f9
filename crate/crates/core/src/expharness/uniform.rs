use crate::measure::{generate_with, EnsembleKind};
use crate::ndcore::{derive_seed, SeededRng};
use crate::solvers::SolverKind;

use super::{ordered, solve_instance, ExpError, Instance, SolveSettings, TrialRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct UniformConfig {
    pub n: usize,
    pub m_list: Vec<usize>,
    pub s: usize,
    pub vectors_per_matrix: usize,
    pub repetitions: usize,
    pub p: f64,
    pub seed: u64,
    pub timing: bool,
}

impl Default for UniformConfig {
    fn default() -> Self {
        Self { n: 100, m_list: vec![40, 60, 80], s: 5, vectors_per_matrix: 100, repetitions: 20, p: 0.5, seed: 0, timing: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformSummary {
    pub m: usize,
    pub ensemble: EnsembleKind,
    pub matrices: usize,
    /// Matrices that recovered every tested vector.
    pub uniform_successes: usize,
    pub vector_successes: usize,
    pub vectors: usize,
}

impl UniformSummary {
    /// Fraction of matrices with uniform recovery; `None` without matrices.
    pub fn fraction(&self) -> Option<f64> {
        (self.matrices > 0).then(|| self.uniform_successes as f64 / self.matrices as f64)
    }

    pub(crate) fn row(&self) -> Vec<String> {
        vec![
            self.m.to_string(),
            self.ensemble.name().to_string(),
            self.matrices.to_string(),
            self.uniform_successes.to_string(),
            self.fraction().map_or_else(|| "NA".into(), |f| f.to_string()),
            self.vector_successes.to_string(),
            self.vectors.to_string(),
        ]
    }
}

pub(crate) const UNIFORM_COLUMNS: [&str; 7] =
    ["m", "ensemble", "matrices", "uniform_successes", "fraction", "vector_successes", "vectors"];

#[derive(Debug, Clone, PartialEq)]
pub struct UniformRun {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<UniformSummary>,
}

impl UniformRun {
    pub fn summary(&self, m: usize, ensemble: &str) -> Option<&UniformSummary> {
        self.summaries.iter().find(|s| s.m == m && s.ensemble.name() == ensemble)
    }
}

/// For each `m` and each of Bernoulli(`p`) and Gaussian: draws `repetitions`
/// matrices and marks a matrix successful iff NNLS recovers all of its
/// `vectors_per_matrix` test signals.
pub fn run_gaussian_comparison(cfg: &UniformConfig) -> Result<UniformRun, ExpError> {
    if cfg.n == 0 || cfg.s == 0 || cfg.s > cfg.n || cfg.m_list.contains(&0) {
        return Err(ExpError::Config(format!("need 1 ≤ s ≤ n and m ≥ 1 (n = {}, s = {})", cfg.n, cfg.s)));
    }
    let ensembles = [EnsembleKind::Bernoulli01 { p: cfg.p }, EnsembleKind::Gaussian];
    let reps = cfg.repetitions;
    let vpm = cfg.vectors_per_matrix;
    let settings = SolveSettings { timing: cfg.timing, ..SolveSettings::default() };
    let blocks = cfg.m_list.len() * ensembles.len();
    let per_matrix = ordered(blocks * reps, |id| {
        let m = cfg.m_list[id / reps / ensembles.len()];
        let ensemble = ensembles[id / reps % ensembles.len()];
        let mseed = derive_seed(cfg.seed, id as u64);
        let a = generate_with(ensemble, m, cfg.n, &mut SeededRng::new(mseed))?;
        (0..vpm)
            .map(|k| {
                let vseed = derive_seed(mseed, k as u64 + 1);
                let inst = Instance::with_matrix(a.clone(), cfg.s, 0.0, vseed)?;
                Ok(solve_instance(&inst, ensemble, SolverKind::Nnls, &settings, (id * vpm + k) as u64, vseed))
            })
            .collect::<Result<Vec<_>, ExpError>>()
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let summaries = (0..blocks)
        .map(|b| {
            let mats = &per_matrix[b * reps..(b + 1) * reps];
            UniformSummary {
                m: cfg.m_list[b / ensembles.len()],
                ensemble: ensembles[b % ensembles.len()],
                matrices: reps,
                uniform_successes: mats.iter().filter(|v| v.iter().all(|r| r.success_noiseless)).count(),
                vector_successes: mats.iter().flatten().filter(|r| r.success_noiseless).count(),
                vectors: reps * vpm,
            }
        })
        .collect();
    Ok(UniformRun { records: per_matrix.into_iter().flatten().collect(), summaries })
}
