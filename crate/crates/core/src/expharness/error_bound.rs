use crate::measure::EnsembleKind;
use crate::ndcore::derive_seed;
use crate::nsp::{build_w, check_l1_nsp_exact, error_constants, estimate_robust_nsp, ExactNspOptions, NspStatus, RobustNspOptions};
use crate::solvers::SolverKind;

use super::{ordered, solve_instance, ExpError, Instance, SolveSettings, TrialRecord};

/// Empirical check of `‖x − x̂‖₂ ≤ D′·(‖t‖₂ + τ̂)·2‖e‖₂` for NNLS on small
/// noisy Bernoulli instances.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBoundConfig {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub p: f64,
    pub sigma: f64,
    pub trials: usize,
    pub rho: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for ErrorBoundConfig {
    fn default() -> Self {
        Self { n: 8, m: 48, s: 1, p: 0.5, sigma: 0.05, trials: 20, rho: 0.25, restarts: 50, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundCheckStatus {
    /// Preconditions held and the bound was satisfied.
    Checked,
    /// Preconditions held and the bound was exceeded.
    Violated,
    /// The weighting event, the ℓ1 NSP or `κρ < 1` did not hold.
    Skipped,
}

impl BoundCheckStatus {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Checked => "checked",
            Self::Violated => "violated",
            Self::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheckRow {
    pub trial_id: u64,
    pub seed: u64,
    pub event: bool,
    pub l1_nsp: bool,
    pub kappa: f64,
    pub q_hat: f64,
    pub d_prime: f64,
    pub t_norm: f64,
    pub noise_norm: f64,
    pub abs_err: f64,
    /// `NaN` when skipped.
    pub bound: f64,
    pub status: BoundCheckStatus,
}

pub(crate) const BOUND_COLUMNS: [&str; 12] = [
    "trial_id", "seed", "event", "l1_nsp", "kappa", "q_hat", "d_prime", "t_norm", "noise_norm", "abs_err", "bound", "status",
];

impl BoundCheckRow {
    pub(crate) fn row(&self) -> Vec<String> {
        vec![
            self.trial_id.to_string(),
            self.seed.to_string(),
            self.event.to_string(),
            self.l1_nsp.to_string(),
            self.kappa.to_string(),
            self.q_hat.to_string(),
            self.d_prime.to_string(),
            self.t_norm.to_string(),
            self.noise_norm.to_string(),
            self.abs_err.to_string(),
            self.bound.to_string(),
            self.status.name().to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBoundRun {
    pub records: Vec<TrialRecord>,
    pub rows: Vec<BoundCheckRow>,
}

impl ErrorBoundRun {
    pub fn count(&self, status: BoundCheckStatus) -> usize {
        self.rows.iter().filter(|r| r.status == status).count()
    }
}

pub fn run_error_bound_check(cfg: &ErrorBoundConfig) -> Result<ErrorBoundRun, ExpError> {
    if cfg.s == 0 || cfg.s > cfg.n || cfg.m == 0 || !(cfg.rho > 0.0 && cfg.rho < 1.0) || !(cfg.p > 0.0 && cfg.p <= 1.0) {
        return Err(ExpError::Config(format!(
            "need 1 ≤ s ≤ n, m ≥ 1, rho ∈ (0, 1), p ∈ (0, 1] (n = {}, s = {}, m = {}, rho = {})",
            cfg.n, cfg.s, cfg.m, cfg.rho
        )));
    }
    let ensemble = EnsembleKind::Bernoulli01 { p: cfg.p };
    let settings = SolveSettings::default();
    let pairs = ordered(cfg.trials, |t| {
        let seed = derive_seed(cfg.seed, t as u64);
        let inst = Instance::generate(ensemble, cfg.n, cfg.m, cfg.s, cfg.sigma, seed)?;
        let rec = solve_instance(&inst, ensemble, SolverKind::Nnls, &settings, t as u64, seed);
        let weights = build_w(&inst.a, cfg.p).map_err(|e| ExpError::Config(e.to_string()))?;
        let cert = &weights.certificate;
        let l1_nsp = check_l1_nsp_exact(&inst.a, cfg.s, &ExactNspOptions::default())
            .map(|r| r.status == NspStatus::Holds)
            .map_err(|e| ExpError::Config(e.to_string()))?;
        let mut row = BoundCheckRow {
            trial_id: t as u64,
            seed,
            event: weights.event,
            l1_nsp,
            kappa: cert.kappa_w,
            q_hat: f64::NAN,
            d_prime: f64::NAN,
            t_norm: weights.t_norm,
            noise_norm: rec.noise_norm,
            abs_err: rec.abs_err,
            bound: f64::NAN,
            status: BoundCheckStatus::Skipped,
        };
        let constants = error_constants(cfg.rho, cert.kappa_w, cert.w_inv_norm()).ok();
        if let (true, true, Some((_, d_prime))) = (weights.event, l1_nsp, constants) {
            let opts = RobustNspOptions { restarts: cfg.restarts, seed: derive_seed(seed, 1), ..RobustNspOptions::default() };
            let report = estimate_robust_nsp(&inst.a, cfg.rho, cfg.s, &opts).map_err(|e| ExpError::Config(e.to_string()))?;
            row.q_hat = report.value;
            row.d_prime = d_prime;
            if report.value > 0.0 {
                row.bound = d_prime * (weights.t_norm + 1.0 / report.value) * 2.0 * rec.noise_norm;
                row.status = if rec.abs_err <= row.bound { BoundCheckStatus::Checked } else { BoundCheckStatus::Violated };
            }
        }
        Ok::<_, ExpError>((rec, row))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let (records, rows) = pairs.into_iter().unzip();
    Ok(ErrorBoundRun { records, rows })
}
