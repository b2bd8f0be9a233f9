//! Recovery experiments with CSV persistence and SVG heatmaps.
//!
//! Every output begins with a comment header: a `# nncs <version>` line and
//! one `#! key=value` line per resolved setting. Feeding that header back
//! through [`ConfigMap::load`] replays the run byte for byte.

mod config;
mod error_bound;
mod noisy;
mod phase;
mod svg;
mod uniform;

pub use config::{ConfigMap, ExperimentConfig, ExperimentOutput};
pub use error_bound::{run_error_bound_check, BoundCheckRow, BoundCheckStatus, ErrorBoundConfig, ErrorBoundRun};
pub use noisy::{run_noisy_comparison, CellSummary, NoisyConfig, NoisyRun};
pub use phase::{run_phase_transition, PhaseConfig, PhaseGrid, PhaseRun};
pub use svg::{ramp_color, render_heatmap, CANVAS, EMPTY_FILL};
pub use uniform::{run_gaussian_comparison, UniformConfig, UniformRun, UniformSummary};

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::measure::{generate_with, noise_with, sparse_nonneg_with, EnsembleKind, MeasureError};
use crate::ndcore::{l2, sub, DenseMatrix, SeededRng};
use crate::solvers::{bpdn, bpdn_nn, l1sq_nnreg, nnls_default, BpdnOptions, SolveError, SolverKind};

#[derive(Debug, Error)]
pub enum ExpError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Relative error at or below which a noiseless recovery counts as exact.
pub const NOISELESS_TOL: f64 = 1e-3;

/// `rel_err ≤ 1e-3`.
pub fn noiseless_success(rel_err: f64) -> bool {
    rel_err <= NOISELESS_TOL
}

/// `abs_err ≤ √10·‖e‖₂/√m`; with `‖e‖₂ = 0` this falls back to the
/// noiseless rule.
pub fn noisy_success(abs_err: f64, rel_err: f64, noise_norm: f64, m: usize) -> bool {
    if noise_norm == 0.0 {
        noiseless_success(rel_err)
    } else {
        abs_err <= 10f64.sqrt() * noise_norm / (m as f64).sqrt()
    }
}

/// How BPDN picks its constraint radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaPolicy {
    /// `η = ‖e‖₂` for the realized noise.
    Instantaneous,
    /// `η = σ·√(χ²_m quantile)`.
    Quantile(f64),
}

impl EtaPolicy {
    pub fn parse(text: &str) -> Result<Self, ExpError> {
        match text.split_once(':') {
            None if text == "instantaneous" => Ok(Self::Instantaneous),
            Some(("quantile", q)) => {
                let q: f64 = q.parse().map_err(|_| ExpError::Config(format!("bad quantile `{q}`")))?;
                if !(q > 0.0 && q < 1.0) {
                    return Err(ExpError::Config(format!("quantile {q} outside (0, 1)")));
                }
                Ok(Self::Quantile(q))
            }
            _ => Err(ExpError::Config(format!("unknown eta policy `{text}`"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Instantaneous => "instantaneous".into(),
            Self::Quantile(q) => format!("quantile:{q}"),
        }
    }

    fn eta(&self, noise_norm: f64, sigma: f64, m: usize) -> f64 {
        match *self {
            Self::Instantaneous => noise_norm,
            Self::Quantile(q) => {
                let chi = ChiSquared::new(m as f64).expect("m ≥ 1");
                sigma * chi.inverse_cdf(q).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    pub eta: EtaPolicy,
    /// `λ` of the ℓ1-squared regularization.
    pub lambda: f64,
    /// Record wall-clock time; off by default so outputs are reproducible.
    pub timing: bool,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self { eta: EtaPolicy::Instantaneous, lambda: 100.0, timing: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub trial_id: u64,
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub ensemble: EnsembleKind,
    pub solver: SolverKind,
    pub sigma: f64,
    pub seed: u64,
    pub settings: SolveSettings,
}

/// One recovery problem `y = Ax + e`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub a: DenseMatrix,
    pub x: Vec<f64>,
    pub e: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: f64,
}

impl Instance {
    /// Draws `A`, then `x`, then `e` from one stream seeded by `seed`.
    pub fn generate(kind: EnsembleKind, n: usize, m: usize, s: usize, sigma: f64, seed: u64) -> Result<Self, ExpError> {
        let mut rng = SeededRng::new(seed);
        let a = generate_with(kind, m, n, &mut rng)?;
        Self::draw_signal(a, s, sigma, &mut rng)
    }

    /// Draws `x` and `e` for a given matrix.
    pub fn with_matrix(a: DenseMatrix, s: usize, sigma: f64, seed: u64) -> Result<Self, ExpError> {
        Self::draw_signal(a, s, sigma, &mut SeededRng::new(seed))
    }

    fn draw_signal(a: DenseMatrix, s: usize, sigma: f64, rng: &mut SeededRng) -> Result<Self, ExpError> {
        let x = sparse_nonneg_with(a.cols(), s, rng)?.into_inner();
        let e = noise_with(a.rows(), sigma, rng)?.into_inner();
        let y = a.mul_vec_unchecked(&x).iter().zip(&e).map(|(u, v)| u + v).collect();
        Ok(Self { a, x, e, y, sigma })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub n: usize,
    pub m: usize,
    pub s: usize,
    /// `None` for non-Bernoulli ensembles.
    pub p: Option<f64>,
    pub ensemble: EnsembleKind,
    pub solver: SolverKind,
    pub seed: u64,
    pub rel_err: f64,
    pub abs_err: f64,
    pub noise_norm: f64,
    pub residual: f64,
    pub success_noiseless: bool,
    pub success_noisy: bool,
    pub wall_ms: u64,
}

pub const CSV_COLUMNS: [&str; 15] = [
    "trial_id",
    "n",
    "m",
    "s",
    "p",
    "ensemble",
    "solver",
    "seed",
    "rel_err",
    "abs_err",
    "noise_norm",
    "residual",
    "success_noiseless",
    "success_noisy",
    "wall_ms",
];

impl TrialRecord {
    fn fields(&self) -> [String; 15] {
        [
            self.trial_id.to_string(),
            self.n.to_string(),
            self.m.to_string(),
            self.s.to_string(),
            self.p.map_or_else(|| "NA".to_string(), |p| p.to_string()),
            self.ensemble.name().to_string(),
            self.solver.name().to_string(),
            self.seed.to_string(),
            self.rel_err.to_string(),
            self.abs_err.to_string(),
            self.noise_norm.to_string(),
            self.residual.to_string(),
            self.success_noiseless.to_string(),
            self.success_noisy.to_string(),
            self.wall_ms.to_string(),
        ]
    }
}

/// Solves one instance; solver failures become `NaN` errors and failed
/// success flags.
pub fn solve_instance(
    inst: &Instance,
    ensemble: EnsembleKind,
    solver: SolverKind,
    settings: &SolveSettings,
    trial_id: u64,
    seed: u64,
) -> TrialRecord {
    let (m, n) = (inst.a.rows(), inst.a.cols());
    let noise_norm = l2(&inst.e);
    let start = Instant::now();
    let xhat: Result<Vec<f64>, SolveError> = match solver {
        SolverKind::Nnls => nnls_default(&inst.a, &inst.y).map(|r| r.x.into_inner()),
        SolverKind::Bpdn | SolverKind::BpdnNn => {
            let eta = settings.eta.eta(noise_norm, inst.sigma, m);
            let run = if solver == SolverKind::Bpdn { bpdn } else { bpdn_nn };
            run(&inst.a, &inst.y, eta, &BpdnOptions::default()).map(|r| r.x.into_inner())
        }
        SolverKind::L1Sq => l1sq_nnreg(&inst.a, &inst.y, settings.lambda).map(|r| r.x.into_inner()),
    };
    let wall_ms = if settings.timing { start.elapsed().as_millis() as u64 } else { 0 };
    let (rel_err, abs_err, residual) = match xhat {
        Ok(xh) => {
            let abs = l2(&sub(&inst.x, &xh));
            let res = l2(&sub(&inst.a.mul_vec_unchecked(&xh), &inst.y));
            (abs / l2(&inst.x), abs, res)
        }
        Err(_) => (f64::NAN, f64::NAN, f64::NAN),
    };
    TrialRecord {
        trial_id,
        n,
        m,
        s: inst.x.iter().filter(|v| **v != 0.0).count(),
        p: ensemble.bernoulli_p(),
        ensemble,
        solver,
        seed,
        rel_err,
        abs_err,
        noise_norm,
        residual,
        success_noiseless: noiseless_success(rel_err),
        success_noisy: noisy_success(abs_err, rel_err, noise_norm, m),
        wall_ms,
    }
}

/// Generates the instance for `cfg` and solves it.
pub fn run_trial(cfg: &TrialConfig) -> Result<TrialRecord, ExpError> {
    let inst = Instance::generate(cfg.ensemble, cfg.n, cfg.m, cfg.s, cfg.sigma, cfg.seed)?;
    Ok(solve_instance(&inst, cfg.ensemble, cfg.solver, &cfg.settings, cfg.trial_id, cfg.seed))
}

/// Runs `job(i)` for `i in 0..count` in parallel, results in index order.
pub(crate) fn ordered<T: Send, F>(count: usize, job: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).into_par_iter().map(job).collect()
}

/// `# nncs <version>` followed by `#! key=value` lines.
pub fn provenance_header(kv: &[(String, String)]) -> String {
    let mut out = format!("# nncs {}\n", crate::VERSION);
    for (k, v) in kv {
        out.push_str(&format!("#! {k}={v}\n"));
    }
    out
}

/// Writes `header` verbatim, then the CSV column row and one row per record.
pub fn write_trials_csv<W: Write>(mut out: W, header: &str, records: &[TrialRecord]) -> Result<(), ExpError> {
    out.write_all(header.as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn trials_csv_string(header: &str, records: &[TrialRecord]) -> Result<String, ExpError> {
    let mut buf = Vec::new();
    write_trials_csv(&mut buf, header, records)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Writes a generic table after `header`.
pub(crate) fn table_csv_string(header: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<String, ExpError> {
    let mut buf = header.as_bytes().to_vec();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(columns)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Reads trial rows back, skipping `#` comment lines.
pub fn read_trials_csv(text: &str) -> Result<Vec<Vec<String>>, ExpError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(ExpError::Config(format!("unexpected CSV columns: {headers:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(solver: SolverKind, seed: u64) -> TrialConfig {
        TrialConfig {
            trial_id: 7,
            n: 100,
            m: 80,
            s: 5,
            ensemble: EnsembleKind::Bernoulli01 { p: 0.5 },
            solver,
            sigma: 0.0,
            seed,
            settings: SolveSettings::default(),
        }
    }

    #[test]
    fn identity_recovers_exactly() {
        let c = TrialConfig { n: 12, m: 12, s: 3, ensemble: EnsembleKind::Identity, ..cfg(SolverKind::Nnls, 1) };
        let r = run_trial(&c).unwrap();
        assert_eq!(r.rel_err, 0.0);
        assert!(r.success_noiseless && r.success_noisy);
        assert_eq!(r.p, None);
    }

    #[test]
    fn bernoulli_noiseless_mostly_succeeds() {
        let ok = (0..40).filter(|&s| run_trial(&cfg(SolverKind::Nnls, s)).unwrap().success_noiseless).count();
        assert!(ok >= 38, "{ok}");
    }

    #[test]
    fn trials_are_deterministic() {
        for solver in [SolverKind::Nnls, SolverKind::Bpdn, SolverKind::BpdnNn, SolverKind::L1Sq] {
            let c = TrialConfig { sigma: 0.1, ..cfg(solver, 3) };
            assert_eq!(run_trial(&c).unwrap(), run_trial(&c).unwrap());
        }
    }

    #[test]
    fn success_flags_recompute_from_errors() {
        for seed in 0..10 {
            let r = run_trial(&TrialConfig { sigma: 0.1, ..cfg(SolverKind::Bpdn, seed) }).unwrap();
            assert_eq!(r.success_noiseless, noiseless_success(r.rel_err));
            assert_eq!(r.success_noisy, noisy_success(r.abs_err, r.rel_err, r.noise_norm, r.m));
        }
    }

    #[test]
    fn failed_solve_is_recorded_in_band() {
        // η = ‖e‖₂ = 0 but y is outside the range of A
        let a = DenseMatrix::from_row_major(3, 1, &[1.0, 1.0, 1.0]).unwrap();
        let inst = Instance { a, x: vec![1.0], e: vec![0.0; 3], y: vec![1.0, 2.0, 3.0], sigma: 0.0 };
        let r = solve_instance(&inst, EnsembleKind::Identity, SolverKind::Bpdn, &SolveSettings::default(), 0, 0);
        assert!(r.rel_err.is_nan() && r.abs_err.is_nan() && r.residual.is_nan());
        assert!(!r.success_noiseless && !r.success_noisy);
        let ok = solve_instance(&inst, EnsembleKind::Identity, SolverKind::Nnls, &SolveSettings::default(), 0, 0);
        // least-squares fit of 1, 2, 3 by a constant is 2
        assert!((ok.abs_err - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eta_policy_parsing() {
        assert_eq!(EtaPolicy::parse("instantaneous").unwrap(), EtaPolicy::Instantaneous);
        assert_eq!(EtaPolicy::parse("quantile:0.9").unwrap(), EtaPolicy::Quantile(0.9));
        assert!(EtaPolicy::parse("quantile:2").is_err() && EtaPolicy::parse("q").is_err());
        // χ²₁ median 0.4549
        let eta = EtaPolicy::Quantile(0.5).eta(0.0, 1.0, 1);
        assert!((eta * eta - 0.454_936).abs() < 1e-5);
    }

    #[test]
    fn csv_round_trip() {
        let recs: Vec<_> = (0..3).map(|s| run_trial(&cfg(SolverKind::Nnls, s)).unwrap()).collect();
        let text = trials_csv_string(&provenance_header(&[("seed".into(), "1".into())]), &recs).unwrap();
        assert!(text.starts_with("# nncs "));
        assert!(text.contains("\n#! seed=1\ntrial_id,n,m,s,p,ensemble,solver,seed,rel_err"));
        let rows = read_trials_csv(&text).unwrap();
        assert_eq!(rows.len(), 3);
        for (row, rec) in rows.iter().zip(&recs) {
            let rel: f64 = row[8].parse().unwrap();
            assert_eq!(rel, rec.rel_err);
            assert_eq!(row[12] == "true", noiseless_success(rel));
        }
    }
}
