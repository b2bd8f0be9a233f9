use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::Path;

use nncs_core::expharness::{ConfigMap, ExpError, ExperimentConfig};
use nncs_core::measure::{gen_noise, gen_sparse_nonneg, EnsembleKind, EnsembleSpec, MeasureError};
use nncs_core::ndcore::textio::{format_matrix, format_vector, parse_matrix, parse_vector};
use nncs_core::ndcore::{derive_seed, DenseMatrix, LinalgError, SeededRng, Vector};
use nncs_core::nsp::{
    build_w, check_l1_nsp_exact, check_mplus, compare_weightings, condition_number, estimate_robust_nsp,
    ExactNspOptions, NspError, NspReport, RobustNspOptions, WeightChoice,
};
use nncs_core::solvers::{bpdn, bpdn_nn, l1sq_nnreg, nnls_default, BpdnOptions, SolveError};
use nncs_core::theory::{
    mc_tail, mc_variance, mc_wm, q_bound, var_s_closed, wm_bound, BoundSet, McSettings, TheoryError,
};
use nncs_core::VERSION;

use crate::args::{
    BoundsArgs, Command, ExpArgs, ExpKind, GenArgs, GenKind, NspArgs, NspCheck, SolveArgs, SolverArg, TheoryCommand,
    VerifyArgs, VerifyKind,
};

/// `println!` that tolerates a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_BAND: u8 = 4;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_IO: u8 = 74;

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Display) -> Self {
        Self { code: EXIT_USAGE, message: message.to_string() }
    }

    fn io(path: &Path, err: impl Display) -> Self {
        Self { code: EXIT_IO, message: format!("{}: {err}", path.display()) }
    }

    fn infeasible(message: impl Display) -> Self {
        Self { code: EXIT_INFEASIBLE, message: message.to_string() }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        Self::usage(e)
    }
}

impl From<TheoryError> for CliError {
    fn from(e: TheoryError) -> Self {
        Self::usage(e)
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Infeasible { .. } => Self::infeasible(e),
            other => Self::usage(other),
        }
    }
}

impl From<NspError> for CliError {
    fn from(e: NspError) -> Self {
        match e {
            NspError::NotInMplus => Self::infeasible(e),
            NspError::Solve(inner) => inner.into(),
            other => Self::usage(other),
        }
    }
}

impl From<ExpError> for CliError {
    fn from(e: ExpError) -> Self {
        match e {
            ExpError::Io(err) => Self { code: EXIT_IO, message: err.to_string() },
            other => Self::usage(other),
        }
    }
}

type Outcome = Result<u8, CliError>;

pub fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Gen(a) => gen(&a),
        Command::Solve(a) => solve(&a),
        Command::Nsp(a) => nsp(&a),
        Command::Theory(TheoryCommand::Bounds(a)) => bounds(&a),
        Command::Theory(TheoryCommand::Verify(a)) => verify(&a),
        Command::Exp(a) => exp(&a),
    }
}

/// The given seed, or a fresh one announced on stderr.
fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("generated seed={s}");
        s
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn parse_err(path: &Path, e: LinalgError) -> CliError {
    CliError::usage(format!("{}: {e}", path.display()))
}

fn read_matrix(path: &Path) -> Result<DenseMatrix, CliError> {
    parse_matrix(&read(path)?).map_err(|e| parse_err(path, e))
}

fn read_vector(path: &Path) -> Result<Vector, CliError> {
    parse_vector(&read(path)?).map_err(|e| parse_err(path, e))
}

fn header(fields: &[(&str, String)]) -> Vec<String> {
    let kv = fields.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
    vec![format!("nncs {VERSION}"), kv]
}

fn print_kv(fields: &[(&str, String)]) {
    for (k, v) in fields {
        say!("{k}={v}");
    }
}

fn require(value: Option<usize>, flag: &str) -> Result<usize, CliError> {
    value.ok_or_else(|| CliError::usage(format!("--{flag} is required for this kind")))
}

fn gen(a: &GenArgs) -> Outcome {
    let seed = resolve_seed(a.seed);
    let mut fields = vec![("command", "gen".to_string()), ("kind", format!("{:?}", a.kind).to_lowercase()), ("seed", seed.to_string())];
    let text = match a.kind {
        GenKind::Sparse => {
            let (n, s) = (require(a.n, "n")?, require(a.s, "s")?);
            fields.extend([("n", n.to_string()), ("s", s.to_string())]);
            format_vector(&gen_sparse_nonneg(n, s, seed)?, &header(&fields))
        }
        GenKind::Noise => {
            let m = require(a.m, "m")?;
            fields.extend([("m", m.to_string()), ("sigma", a.sigma.to_string())]);
            format_vector(&gen_noise(m, a.sigma, seed)?, &header(&fields))
        }
        kind => {
            let (m, n) = (require(a.m, "m")?, require(a.n, "n")?);
            let kind = match kind {
                GenKind::Bernoulli01 => {
                    fields.push(("p", a.p.to_string()));
                    EnsembleKind::Bernoulli01 { p: a.p }
                }
                GenKind::Gaussian => EnsembleKind::Gaussian,
                _ => EnsembleKind::Identity,
            };
            fields.extend([("m", m.to_string()), ("n", n.to_string())]);
            format_matrix(&EnsembleSpec { kind, m, n, seed }.generate()?, &header(&fields))
        }
    };
    write(&a.out, &text)?;
    Ok(EXIT_OK)
}

fn solve(a: &SolveArgs) -> Outcome {
    let mat = read_matrix(&a.matrix)?;
    let y = read_vector(&a.y)?;
    if y.len() != mat.rows() {
        return Err(CliError::usage(format!("y has {} entries, matrix has {} rows", y.len(), mat.rows())));
    }
    let mut fields = vec![
        ("command", "solve".to_string()),
        ("solver", format!("{:?}", a.solver).to_lowercase()),
        ("matrix", a.matrix.display().to_string()),
        ("y", a.y.display().to_string()),
    ];
    let (x, converged, report): (Vector, bool, Vec<(&str, String)>) = match a.solver {
        SolverArg::Nnls => {
            let r = nnls_default(&mat, &y)?;
            let rep = vec![("residual", r.residual_norm.to_string()), ("iterations", r.iterations.to_string())];
            (r.x, r.converged, rep)
        }
        SolverArg::Bpdn | SolverArg::BpdnNn => {
            let eta = a.eta.unwrap_or(0.0);
            fields.push(("eta", eta.to_string()));
            let run = if a.solver == SolverArg::Bpdn { bpdn } else { bpdn_nn };
            let r = run(&mat, &y, eta, &BpdnOptions::default())?;
            let rep = vec![
                ("objective", r.objective.to_string()),
                ("constraint_slack", r.constraint_slack.to_string()),
                ("duality_gap_estimate", r.duality_gap_estimate.to_string()),
                ("iterations", r.iterations.to_string()),
            ];
            (r.x, r.converged, rep)
        }
        SolverArg::L1sq => {
            let lambda = a.lambda.unwrap_or(100.0);
            fields.push(("lambda", lambda.to_string()));
            let r = l1sq_nnreg(&mat, &y, lambda)?;
            let obj = r.x.iter().sum::<f64>().powi(2) + (lambda * r.residual_norm).powi(2);
            let rep = vec![("objective", obj.to_string()), ("iterations", r.iterations.to_string())];
            (r.x, r.converged, rep)
        }
    };
    write(&a.out, &format_vector(&x, &header(&fields)))?;
    print_kv(&fields[1..2]);
    print_kv(&report);
    print_kv(&[("converged", converged.to_string())]);
    Ok(if converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn weight_fields(prefix: &'static str, c: &WeightChoice) -> Vec<(String, String)> {
    let mut out = vec![
        (format!("{prefix}_kappa"), c.kappa.to_string()),
        (format!("{prefix}_w_inv_norm"), c.w_inv_norm.to_string()),
        (format!("{prefix}_t_norm"), c.t_norm.to_string()),
    ];
    let (cp, dp) = c.constants.map_or(("NA".into(), "NA".into()), |(a, b)| (a.to_string(), b.to_string()));
    out.push((format!("{prefix}_c_prime"), cp));
    out.push((format!("{prefix}_d_prime"), dp));
    out
}

fn report_fields(r: &NspReport) -> Vec<(String, String)> {
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
    vec![
        ("method".into(), r.method.name().into()),
        ("s".into(), r.s.to_string()),
        ("status".into(), r.status.name().into()),
        ("value".into(), (r.value + 0.0).to_string()),
        ("rho".into(), r.rho.to_string()),
        ("tau_estimate".into(), opt(r.tau_estimate)),
        ("certified_lower".into(), opt(r.certified_lower)),
        ("witness".into(), r.witness.as_ref().map_or_else(|| "NA".into(), |w| join(w))),
    ]
}

fn nsp(a: &NspArgs) -> Outcome {
    let mat = read_matrix(&a.matrix)?;
    let mut kv: Vec<(String, String)> = vec![("check".into(), format!("{:?}", a.check).to_lowercase())];
    match a.check {
        NspCheck::Mplus => {
            let c = check_mplus(&mat)?;
            if !c.feasible {
                say!("matrix is not in M+: no t with A^T t > 0");
                return Err(CliError::infeasible("not in M+"));
            }
            say!("matrix is in M+ (kappa(w) = {})", c.kappa_w);
            kv.extend([
                ("feasible".into(), "true".into()),
                ("kappa_w".into(), c.kappa_w.to_string()),
                ("t".into(), join(&c.t)),
                ("w".into(), join(&c.w)),
            ]);
        }
        NspCheck::Kappa => {
            let c = condition_number(&mat)?;
            say!("kappa(A) = {}", c.kappa_w);
            kv.extend([("kappa".into(), c.kappa_w.to_string()), ("t".into(), join(&c.t)), ("w".into(), join(&c.w))]);
        }
        NspCheck::W => {
            let rep = build_w(&mat, a.p)?;
            let cmp = compare_weightings(&mat, a.p, a.rho)?;
            say!(
                "uniform t = 1/(pm): event {} (max w <= 3/2 and min w >= 1/2), kappa(w) = {}",
                if rep.event { "holds" } else { "fails" },
                rep.certificate.kappa_w
            );
            kv.extend([
                ("p".into(), a.p.to_string()),
                ("rho".into(), a.rho.to_string()),
                ("event".into(), rep.event.to_string()),
                ("w".into(), join(&rep.certificate.w)),
            ]);
            kv.extend(weight_fields("uniform", &cmp.uniform));
            match &cmp.optimal {
                Some(c) => kv.extend(weight_fields("optimal", c)),
                None => kv.push(("optimal_kappa".into(), "NA".into())),
            }
        }
        NspCheck::L1Exact => {
            let r = check_l1_nsp_exact(&mat, a.s, &ExactNspOptions::default())?;
            say!("l1 nullspace property of order {}: {} (worst ratio {})", a.s, r.status.name(), r.value);
            kv.extend(report_fields(&r));
        }
        NspCheck::L2Estimate => {
            let seed = resolve_seed(a.seed);
            let opts = RobustNspOptions { restarts: a.restarts, seed, ..RobustNspOptions::default() };
            let r = estimate_robust_nsp(&mat, a.rho, a.s, &opts)?;
            say!(
                "robust l2 nullspace property (rho = {}, s = {}): {}, min |Av| on T about {}",
                a.rho,
                a.s,
                r.status.name(),
                r.value
            );
            kv.push(("seed".into(), seed.to_string()));
            kv.push(("restarts".into(), a.restarts.to_string()));
            kv.extend(report_fields(&r));
        }
    }
    say!("");
    for (k, v) in &kv {
        say!("{k}={v}");
    }
    Ok(EXIT_OK)
}

fn bounds(a: &BoundsArgs) -> Outcome {
    let b = BoundSet::new(a.n, a.m, a.s, a.p, a.rho, a.c1, a.c2)?;
    for (k, v) in b.to_kv() {
        say!("{k}={v}");
    }
    Ok(EXIT_OK)
}

fn random_unit(n: usize, seed: u64) -> Result<Vec<f64>, CliError> {
    if n == 0 {
        return Err(CliError::usage("--n must be positive"));
    }
    let mut rng = SeededRng::new(seed);
    let mut z: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    z.iter_mut().for_each(|v| *v /= norm);
    Ok(z)
}

fn verify(a: &VerifyArgs) -> Outcome {
    let seed = resolve_seed(a.seed);
    let settings = McSettings { confidence_sigmas: a.sigmas, ..McSettings::new(a.trials, derive_seed(seed, 1))? };
    let (mc, reference, pass) = match a.kind {
        VerifyKind::Tail => {
            let z = random_unit(a.n, seed)?;
            let bound = q_bound(a.p, a.theta)?;
            let mc = mc_tail(&z, a.p, a.theta, &settings)?;
            (mc, bound, mc.at_least(bound, a.sigmas))
        }
        VerifyKind::Variance => {
            let z = random_unit(a.n, seed)?;
            let (var, _) = var_s_closed(&z, a.p)?;
            let mc = mc_variance(&z, a.p, &settings)?;
            (mc, var, mc.within(var, a.sigmas))
        }
        VerifyKind::Wm => {
            let bound = wm_bound(a.n, a.s, a.p)?;
            let mc = mc_wm(a.n, a.s, a.p, a.m, &settings)?;
            (mc, bound, mc.estimate <= bound + a.sigmas * mc.std_err)
        }
    };
    print_kv(&[
        ("kind", format!("{:?}", a.kind).to_lowercase()),
        ("p", a.p.to_string()),
        ("trials", a.trials.to_string()),
        ("seed", seed.to_string()),
        ("estimate", mc.estimate.to_string()),
        ("std_err", mc.std_err.to_string()),
        ("reference", reference.to_string()),
        ("sigmas", a.sigmas.to_string()),
        ("pass", pass.to_string()),
    ]);
    Ok(if pass { EXIT_OK } else { EXIT_BAND })
}

fn exp_name(kind: ExpKind) -> Option<&'static str> {
    match kind {
        ExpKind::Phase => Some("phase"),
        ExpKind::Noisy => Some("noisy"),
        ExpKind::Uniform => Some("uniform"),
        ExpKind::ErrorBound => Some("error_bound"),
        ExpKind::Run => None,
    }
}

/// Places the provenance header in an XML comment after the declaration.
fn svg_with_header(svg: &str, header: &str) -> String {
    match svg.split_once('\n') {
        Some((decl, rest)) => format!("{decl}\n<!--\n{header}-->\n{rest}"),
        None => svg.to_string(),
    }
}

fn exp(a: &ExpArgs) -> Outcome {
    let mut map = match &a.config {
        Some(path) => ConfigMap::load(&read(path)?)?,
        None => ConfigMap::new(),
    };
    if let Some(name) = exp_name(a.experiment) {
        match map.get("experiment") {
            Some(existing) if existing != name => {
                return Err(CliError::usage(format!("config describes experiment `{existing}`, not `{name}`")));
            }
            _ => map.set("experiment", name),
        }
    }
    let mut flags = ConfigMap::new();
    for (k, v) in a.overrides() {
        flags.set(k, &v);
    }
    map.merge(&flags);
    if map.get("seed").is_none() {
        map.set("seed", &resolve_seed(None).to_string());
    }
    let cfg = ExperimentConfig::from_map(&map)?;
    let out = cfg.run()?;
    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    let name = cfg.name();
    let trials = a.out_dir.join(format!("{name}_trials.csv"));
    let summary = a.out_dir.join(format!("{name}_summary.csv"));
    write(&trials, &out.trials_csv)?;
    write(&summary, &out.summary_csv)?;
    let mut kv = vec![
        ("experiment", name.to_string()),
        ("trials_csv", trials.display().to_string()),
        ("summary_csv", summary.display().to_string()),
    ];
    if let Some(svg) = &out.svg {
        let path = a.out_dir.join(format!("{name}_heatmap.svg"));
        write(&path, &svg_with_header(svg, &cfg.header()))?;
        kv.push(("svg", path.display().to_string()));
    }
    if let Some(passed) = out.passed {
        kv.push(("passed", passed.to_string()));
    }
    print_kv(&kv);
    Ok(if out.passed == Some(false) { EXIT_BAND } else { EXIT_OK })
}
