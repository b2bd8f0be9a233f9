use crate::measure::EnsembleKind;
use crate::ndcore::{derive_seed, SeededRng};
use crate::solvers::SolverKind;

use super::{ordered, run_trial, ExpError, SolveSettings, TrialConfig, TrialRecord};

/// Success counts binned over `(δ, r) = (m/n, s/m) ∈ [0, 1]²`.
///
/// Bin `(i, j)` covers `δ ∈ [i/G, (i+1)/G)` and `r ∈ [j/G, (j+1)/G)`; the
/// value 1 falls into the last bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseGrid {
    pub g: usize,
    /// Row-major by `r`: entry `j·G + i`.
    pub counts: Vec<usize>,
    pub successes: Vec<usize>,
}

impl PhaseGrid {
    pub fn new(g: usize) -> Self {
        assert!(g > 0, "grid needs at least one bin");
        Self { g, counts: vec![0; g * g], successes: vec![0; g * g] }
    }

    pub fn bin(&self, v: f64) -> usize {
        ((v * self.g as f64).floor().max(0.0) as usize).min(self.g - 1)
    }

    pub fn add(&mut self, delta: f64, r: f64, success: bool) {
        let k = self.bin(r) * self.g + self.bin(delta);
        self.counts[k] += 1;
        self.successes[k] += usize::from(success);
    }

    /// Success fraction of bin (`delta_bin`, `r_bin`); `None` when empty.
    pub fn fraction(&self, delta_bin: usize, r_bin: usize) -> Option<f64> {
        let k = r_bin * self.g + delta_bin;
        (self.counts[k] > 0).then(|| self.successes[k] as f64 / self.counts[k] as f64)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub(crate) fn rows(&self) -> Vec<Vec<String>> {
        let g = self.g as f64;
        let mut rows = Vec::with_capacity(self.g * self.g);
        for j in 0..self.g {
            for i in 0..self.g {
                let k = j * self.g + i;
                rows.push(vec![
                    (i as f64 / g).to_string(),
                    ((i + 1) as f64 / g).to_string(),
                    (j as f64 / g).to_string(),
                    ((j + 1) as f64 / g).to_string(),
                    self.counts[k].to_string(),
                    self.successes[k].to_string(),
                    self.fraction(i, j).map_or_else(|| "NA".into(), |f| f.to_string()),
                ]);
            }
        }
        rows
    }
}

pub(crate) const GRID_COLUMNS: [&str; 7] = ["delta_lo", "delta_hi", "r_lo", "r_hi", "count", "successes", "fraction"];

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    pub trials: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub m_min: usize,
    pub s_min: usize,
    pub p: f64,
    pub grid: usize,
    pub seed: u64,
    pub timing: bool,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self { trials: 200, n_min: 10, n_max: 500, m_min: 10, s_min: 1, p: 0.5, grid: 20, seed: 0, timing: false }
    }
}

impl PhaseConfig {
    pub fn validate(&self) -> Result<(), ExpError> {
        let bad = |msg: String| Err(ExpError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return bad(format!("need 1 ≤ n_min ≤ n_max (n_min = {}, n_max = {})", self.n_min, self.n_max));
        }
        if self.m_min == 0 || self.m_min > self.n_min {
            return bad(format!("need 1 ≤ m_min ≤ n_min (m_min = {})", self.m_min));
        }
        if self.s_min == 0 || self.s_min > self.m_min {
            return bad(format!("need 1 ≤ s_min ≤ m_min (s_min = {})", self.s_min));
        }
        if !(0.0..=1.0).contains(&self.p) || self.grid == 0 {
            return bad(format!("need p ∈ [0, 1] and grid ≥ 1 (p = {}, grid = {})", self.p, self.grid));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRun {
    pub records: Vec<TrialRecord>,
    pub grid: PhaseGrid,
}

/// Draws `(n, m, s)` uniformly in that order, runs noiseless NNLS trials on
/// Bernoulli(`p`) matrices and bins them by `(m/n, s/m)`.
pub fn run_phase_transition(cfg: &PhaseConfig) -> Result<PhaseRun, ExpError> {
    cfg.validate()?;
    let settings = SolveSettings { timing: cfg.timing, ..SolveSettings::default() };
    let records = ordered(cfg.trials, |i| {
        let seed = derive_seed(cfg.seed, i as u64);
        let mut dims = SeededRng::child(seed, 0);
        let n = dims.in_range(cfg.n_min, cfg.n_max);
        let m = dims.in_range(cfg.m_min, n);
        let s = dims.in_range(cfg.s_min, m);
        run_trial(&TrialConfig {
            trial_id: i as u64,
            n,
            m,
            s,
            ensemble: EnsembleKind::Bernoulli01 { p: cfg.p },
            solver: SolverKind::Nnls,
            sigma: 0.0,
            seed,
            settings,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let mut grid = PhaseGrid::new(cfg.grid);
    for r in &records {
        grid.add(r.m as f64 / r.n as f64, r.s as f64 / r.m as f64, r.success_noiseless);
    }
    Ok(PhaseRun { records, grid })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PhaseConfig {
        PhaseConfig { trials: 300, n_min: 10, n_max: 40, m_min: 4, s_min: 1, grid: 4, seed: 5, ..PhaseConfig::default() }
    }

    #[test]
    fn binning_edges() {
        let g = PhaseGrid::new(4);
        assert_eq!(g.bin(0.0), 0);
        assert_eq!(g.bin(0.2499), 0);
        assert_eq!(g.bin(0.25), 1);
        assert_eq!(g.bin(1.0), 3);
    }

    #[test]
    fn conservation_and_shape() {
        let run = run_phase_transition(&small()).unwrap();
        assert_eq!(run.grid.total(), 300);
        assert_eq!(run.records.len(), 300);
        for (c, s) in run.grid.counts.iter().zip(&run.grid.successes) {
            assert!(s <= c);
        }
        for (i, r) in run.records.iter().enumerate() {
            assert_eq!(r.trial_id, i as u64);
            assert!(r.m <= r.n && r.s <= r.m && (10..=40).contains(&r.n));
        }
        // sparse and well sampled: mostly successes; dense and undersampled: mostly failures
        let easy = run.records.iter().filter(|r| r.m * 2 > r.n && r.s * 5 < r.m).collect::<Vec<_>>();
        let hard = run.records.iter().filter(|r| r.s * 4 > 3 * r.m && r.m * 4 < 3 * r.n).collect::<Vec<_>>();
        let frac = |v: &[&TrialRecord]| v.iter().filter(|r| r.success_noiseless).count() as f64 / v.len() as f64;
        assert!(!easy.is_empty() && frac(&easy) > 0.8, "easy {}", frac(&easy));
        assert!(!hard.is_empty() && frac(&hard) < 0.2, "hard {}", frac(&hard));
    }

    #[test]
    fn reruns_match() {
        assert_eq!(run_phase_transition(&small()).unwrap(), run_phase_transition(&small()).unwrap());
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(run_phase_transition(&PhaseConfig { trials: 0, ..small() }).is_err());
        assert!(run_phase_transition(&PhaseConfig { m_min: 50, ..small() }).is_err());
    }
}
