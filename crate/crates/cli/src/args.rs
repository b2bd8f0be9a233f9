use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "nncs", version, about = "Nonnegative compressed sensing toolkit")]
pub struct Cli {
    /// Worker threads for parallel runners; defaults to all cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random matrix or vector and write it in the text format.
    Gen(GenArgs),
    /// Recover a signal from a matrix and measurements.
    Solve(SolveArgs),
    /// Nullspace-property and positive-orthant diagnostics.
    Nsp(NspArgs),
    /// Closed-form bounds and their Monte-Carlo checks.
    #[command(subcommand)]
    Theory(TheoryCommand),
    /// Run an experiment and write CSV (and SVG) outputs.
    Exp(Box<ExpArgs>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Bernoulli01,
    Gaussian,
    Identity,
    /// Nonnegative s-sparse vector of length n.
    Sparse,
    /// Gaussian noise vector of length m.
    Noise,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Nnls,
    Bpdn,
    BpdnNn,
    L1sq,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(value_enum)]
    pub solver: SolverArg,
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    /// Constraint radius for bpdn and bpdn-nn.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Regularization weight for l1sq.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NspCheck {
    Mplus,
    Kappa,
    W,
    L1Exact,
    L2Estimate,
}

#[derive(Debug, Args)]
pub struct NspArgs {
    #[arg(value_enum)]
    pub check: NspCheck,
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    /// Bernoulli parameter behind the uniform weighting.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum TheoryCommand {
    /// Print every closed-form bound as key=value lines.
    Bounds(BoundsArgs),
    /// Compare a closed form against Monte Carlo; exit 4 outside the band.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub s: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyKind {
    Tail,
    Variance,
    Wm,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub kind: VerifyKind,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dimension of the random unit vector (tail, variance) or of h (wm).
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Tail level θ.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// Sparsity for wm.
    #[arg(long, default_value_t = 2)]
    pub s: usize,
    /// Rows averaged into h for wm.
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    #[arg(long, default_value_t = 4.0)]
    pub sigmas: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExpKind {
    Phase,
    Noisy,
    Uniform,
    ErrorBound,
    /// Take the experiment from the config file.
    Run,
}

#[derive(Debug, Args)]
pub struct ExpArgs {
    #[arg(value_enum)]
    pub experiment: ExpKind,
    /// INI file, or any earlier output carrying a `#!` header.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub n_min: Option<String>,
    #[arg(long)]
    pub n_max: Option<String>,
    #[arg(long)]
    pub m_min: Option<String>,
    #[arg(long)]
    pub s_min: Option<String>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub deltas: Option<String>,
    #[arg(long)]
    pub rs: Option<String>,
    #[arg(long)]
    pub trials_per_cell: Option<String>,
    /// `instantaneous` or `quantile:Q`.
    #[arg(long)]
    pub eta: Option<String>,
    #[arg(long)]
    pub m_list: Option<String>,
    #[arg(long)]
    pub vectors: Option<String>,
    #[arg(long)]
    pub repetitions: Option<String>,
    #[arg(long)]
    pub restarts: Option<String>,
    /// Record wall-clock milliseconds; outputs stop being reproducible.
    #[arg(long)]
    pub timing: bool,
}

impl ExpArgs {
    /// Explicit flags as `(config key, value)` pairs.
    pub fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out: Vec<(&'static str, String)> = [
            ("trials", &self.trials),
            ("n", &self.n),
            ("m", &self.m),
            ("s", &self.s),
            ("p", &self.p),
            ("sigma", &self.sigma),
            ("rho", &self.rho),
            ("n_min", &self.n_min),
            ("n_max", &self.n_max),
            ("m_min", &self.m_min),
            ("s_min", &self.s_min),
            ("grid", &self.grid),
            ("deltas", &self.deltas),
            ("rs", &self.rs),
            ("trials_per_cell", &self.trials_per_cell),
            ("eta", &self.eta),
            ("m_list", &self.m_list),
            ("vectors", &self.vectors),
            ("repetitions", &self.repetitions),
            ("restarts", &self.restarts),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
        .collect();
        if let Some(seed) = self.seed {
            out.push(("seed", seed.to_string()));
        }
        if self.timing {
            out.push(("timing", "true".into()));
        }
        out
    }
}
