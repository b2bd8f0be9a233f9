use crate::measure::EnsembleKind;
use crate::ndcore::derive_seed;
use crate::solvers::SolverKind;

use super::{ordered, solve_instance, EtaPolicy, ExpError, Instance, SolveSettings, TrialRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyConfig {
    pub n: usize,
    /// `δ = m/n` values of the grid.
    pub deltas: Vec<f64>,
    /// `r = s/m` values of the grid.
    pub rs: Vec<f64>,
    pub trials_per_cell: usize,
    pub sigma: f64,
    pub p: f64,
    pub eta: EtaPolicy,
    pub seed: u64,
    pub timing: bool,
}

impl Default for NoisyConfig {
    fn default() -> Self {
        Self {
            n: 100,
            deltas: vec![0.2, 0.4, 0.6, 0.8],
            rs: vec![0.05, 0.1, 0.2, 0.3],
            trials_per_cell: 20,
            sigma: 0.1,
            p: 0.5,
            eta: EtaPolicy::Instantaneous,
            seed: 0,
            timing: false,
        }
    }
}

impl NoisyConfig {
    /// `(m, s)` of each cell, `δ` outer and `r` inner.
    pub fn cells(&self) -> Vec<(f64, f64, usize, usize)> {
        let mut out = Vec::new();
        for &d in &self.deltas {
            let m = ((d * self.n as f64).round() as usize).clamp(1, self.n);
            for &r in &self.rs {
                let s = ((r * m as f64).round() as usize).clamp(1, m);
                out.push((d, r, m, s));
            }
        }
        out
    }

    fn validate(&self) -> Result<(), ExpError> {
        let unit = |v: &f64| *v > 0.0 && *v <= 1.0;
        if self.n == 0 || self.deltas.is_empty() || self.rs.is_empty() {
            return Err(ExpError::Config("need n ≥ 1 and non-empty delta and r lists".into()));
        }
        if !self.deltas.iter().all(unit) || !self.rs.iter().all(unit) {
            return Err(ExpError::Config("delta and r values must lie in (0, 1]".into()));
        }
        if !(self.sigma >= 0.0) || !(0.0..=1.0).contains(&self.p) {
            return Err(ExpError::Config(format!("need sigma ≥ 0, p ∈ [0, 1] (sigma = {}, p = {})", self.sigma, self.p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub delta: f64,
    pub r: f64,
    pub m: usize,
    pub s: usize,
    pub trials: usize,
    pub nnls_successes: usize,
    pub bpdn_successes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyRun {
    /// NNLS and BPDN rows alternate; both rows of a pair share `trial_id`.
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
}

impl NoisyRun {
    /// `(NNLS, BPDN)` success fractions over all trials.
    pub fn mean_success(&self) -> (f64, f64) {
        let total: usize = self.cells.iter().map(|c| c.trials).sum();
        let nn: usize = self.cells.iter().map(|c| c.nnls_successes).sum();
        let bp: usize = self.cells.iter().map(|c| c.bpdn_successes).sum();
        (nn as f64 / total.max(1) as f64, bp as f64 / total.max(1) as f64)
    }
}

pub(crate) const CELL_COLUMNS: [&str; 7] = ["delta", "r", "m", "s", "trials", "nnls_successes", "bpdn_successes"];

impl CellSummary {
    pub(crate) fn row(&self) -> Vec<String> {
        vec![
            self.delta.to_string(),
            self.r.to_string(),
            self.m.to_string(),
            self.s.to_string(),
            self.trials.to_string(),
            self.nnls_successes.to_string(),
            self.bpdn_successes.to_string(),
        ]
    }
}

/// Paired NNLS and BPDN trials on identical `(A, x, e)`; success is judged
/// by the noisy rule.
pub fn run_noisy_comparison(cfg: &NoisyConfig) -> Result<NoisyRun, ExpError> {
    cfg.validate()?;
    let cells = cfg.cells();
    let per = cfg.trials_per_cell;
    let ensemble = EnsembleKind::Bernoulli01 { p: cfg.p };
    let settings = SolveSettings { eta: cfg.eta, timing: cfg.timing, ..SolveSettings::default() };
    let pairs = ordered(cells.len() * per, |t| {
        let (_, _, m, s) = cells[t / per];
        let seed = derive_seed(cfg.seed, t as u64);
        let inst = Instance::generate(ensemble, cfg.n, m, s, cfg.sigma, seed)?;
        Ok::<_, ExpError>([SolverKind::Nnls, SolverKind::Bpdn]
            .map(|solver| solve_instance(&inst, ensemble, solver, &settings, t as u64, seed)))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let summaries = cells
        .iter()
        .enumerate()
        .map(|(c, &(delta, r, m, s))| {
            let block = &pairs[c * per..(c + 1) * per];
            CellSummary {
                delta,
                r,
                m,
                s,
                trials: per,
                nnls_successes: block.iter().filter(|p| p[0].success_noisy).count(),
                bpdn_successes: block.iter().filter(|p| p[1].success_noisy).count(),
            }
        })
        .collect();
    Ok(NoisyRun { records: pairs.into_iter().flatten().collect(), cells: summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> NoisyConfig {
        NoisyConfig { n: 40, deltas: vec![0.5, 0.9], rs: vec![0.1, 0.25], trials_per_cell: 12, seed: 3, ..NoisyConfig::default() }
    }

    #[test]
    fn pairs_share_instances() {
        let run = run_noisy_comparison(&small()).unwrap();
        assert_eq!(run.records.len(), 2 * 4 * 12);
        for pair in run.records.chunks(2) {
            assert_eq!(pair[0].trial_id, pair[1].trial_id);
            assert_eq!(pair[0].seed, pair[1].seed);
            assert_eq!(pair[0].noise_norm, pair[1].noise_norm);
            assert_eq!((pair[0].solver, pair[1].solver), (SolverKind::Nnls, SolverKind::Bpdn));
            let inst = Instance::generate(EnsembleKind::Bernoulli01 { p: 0.5 }, 40, pair[0].m, pair[0].s, 0.1, pair[0].seed).unwrap();
            assert_eq!(crate::ndcore::l2(&inst.e), pair[0].noise_norm);
        }
        for c in &run.cells {
            assert!(c.nnls_successes <= c.trials && c.bpdn_successes <= c.trials);
        }
    }

    #[test]
    fn zero_noise_reduces_to_exact_recovery() {
        let run = run_noisy_comparison(&NoisyConfig { sigma: 0.0, ..small() }).unwrap();
        for r in &run.records {
            assert_eq!(r.noise_norm, 0.0);
            assert_eq!(r.success_noisy, r.success_noiseless);
        }
    }

    #[test]
    fn nnls_at_least_as_good_on_average() {
        let run = run_noisy_comparison(&small()).unwrap();
        let (nn, bp) = run.mean_success();
        let total = (4 * 12) as f64;
        let sd = ((nn * (1.0 - nn) + bp * (1.0 - bp)) / total).sqrt();
        assert!(nn + 2.0 * sd >= bp, "nnls {nn} bpdn {bp}");
    }

    #[test]
    fn cells_round_dimensions() {
        let cfg = NoisyConfig { n: 100, deltas: vec![0.8], rs: vec![0.0625], ..NoisyConfig::default() };
        assert_eq!(cfg.cells(), vec![(0.8, 0.0625, 80, 5)]);
        assert!(run_noisy_comparison(&NoisyConfig { deltas: vec![1.5], ..small() }).is_err());
    }
}
