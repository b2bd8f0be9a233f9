use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nncs_core::ndcore::textio::{format_vector, parse_matrix, parse_vector};

fn nncs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nncs")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn kv(out: &Output, key: &str) -> Option<String> {
    stdout(out).lines().find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_string))
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

/// Writes A, x and y = A x for a Bernoulli instance.
fn instance(dir: &Path, m: &str, n: &str, s: &str) {
    assert_eq!(code(&nncs(&["gen", "--kind", "bernoulli01", "--m", m, "--n", n, "--seed", "11", "--out", &p(dir, "a.txt")])), 0);
    assert_eq!(code(&nncs(&["gen", "--kind", "sparse", "--n", n, "--s", s, "--seed", "12", "--out", &p(dir, "x.txt")])), 0);
    let a = parse_matrix(&fs::read_to_string(dir.join("a.txt")).unwrap()).unwrap();
    let x = parse_vector(&fs::read_to_string(dir.join("x.txt")).unwrap()).unwrap();
    fs::write(dir.join("y.txt"), format_vector(&a.mul_vec(&x).unwrap(), &[])).unwrap();
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&nncs(&["--help"])), 0);
    let v = nncs(&["--version"]);
    assert_eq!(code(&v), 0);
    assert!(stdout(&v).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn missing_required_flag_is_usage_error() {
    let out = nncs(&["solve", "nnls", "--y", "y.txt", "--out", "x.txt"]);
    assert_eq!(code(&out), 64);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--matrix"));
    assert_eq!(code(&nncs(&["frobnicate"])), 64);
}

#[test]
fn unreadable_input_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nncs(&["nsp", "mplus", "--matrix", &p(dir.path(), "absent.txt")]);
    assert_eq!(code(&out), 74);
}

#[test]
fn malformed_input_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.txt"), "2 2\n1 0\n").unwrap();
    assert_eq!(code(&nncs(&["nsp", "mplus", "--matrix", &p(dir.path(), "m.txt")])), 64);
}

#[test]
fn gen_output_carries_header_and_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        nncs(&["gen", "--kind", "gaussian", "--m", "3", "--n", "4", "--seed", "5", "--out", &p(dir.path(), name)])
    };
    assert_eq!(code(&run("a.txt")), 0);
    assert_eq!(code(&run("b.txt")), 0);
    let a = fs::read_to_string(dir.path().join("a.txt")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.txt")).unwrap());
    let mut lines = a.lines();
    assert_eq!(lines.next().unwrap(), format!("# nncs {}", env!("CARGO_PKG_VERSION")));
    assert!(lines.next().unwrap().contains("seed=5"));
}

#[test]
fn omitted_seed_is_announced() {
    let dir = tempfile::tempdir().unwrap();
    let out = nncs(&["gen", "--kind", "noise", "--m", "3", "--out", &p(dir.path(), "e.txt")]);
    assert_eq!(code(&out), 0);
    let err = String::from_utf8_lossy(&out.stderr);
    let seed = err.lines().find_map(|l| l.strip_prefix("generated seed=")).expect("seed on stderr");
    let text = fs::read_to_string(dir.path().join("e.txt")).unwrap();
    assert!(text.contains(&format!("seed={seed}")));
}

#[test]
fn nnls_recovers_noiseless_instance() {
    let dir = tempfile::tempdir().unwrap();
    instance(dir.path(), "30", "40", "3");
    let out = nncs(&["solve", "nnls", "--matrix", &p(dir.path(), "a.txt"), "--y", &p(dir.path(), "y.txt"), "--out", &p(dir.path(), "xh.txt")]);
    assert_eq!(code(&out), 0);
    assert_eq!(kv(&out, "converged").as_deref(), Some("true"));
    let x = parse_vector(&fs::read_to_string(dir.path().join("x.txt")).unwrap()).unwrap();
    let xh = parse_vector(&fs::read_to_string(dir.path().join("xh.txt")).unwrap()).unwrap();
    let err = x.iter().zip(xh.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(err < 1e-8, "error {err}");
}

#[test]
fn every_solver_runs() {
    let dir = tempfile::tempdir().unwrap();
    instance(dir.path(), "20", "30", "2");
    for solver in ["bpdn", "bpdn-nn", "l1sq"] {
        let out = nncs(&["solve", solver, "--matrix", &p(dir.path(), "a.txt"), "--y", &p(dir.path(), "y.txt"), "--out", &p(dir.path(), "xh.txt")]);
        assert_eq!(code(&out), 0, "{solver}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn infeasible_bpdn_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "3 1\n1\n1\n1\n").unwrap();
    fs::write(dir.path().join("y.txt"), "3\n1\n2\n3\n").unwrap();
    let out = nncs(&["solve", "bpdn-nn", "--eta", "0", "--matrix", &p(dir.path(), "a.txt"), "--y", &p(dir.path(), "y.txt"), "--out", &p(dir.path(), "x.txt")]);
    assert_eq!(code(&out), 3);
}

#[test]
fn mplus_and_kappa_exit_three_outside_orthant_cone() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.txt"), "1 2\n1 -1\n").unwrap();
    assert_eq!(code(&nncs(&["nsp", "mplus", "--matrix", &p(dir.path(), "m.txt")])), 3);
    assert_eq!(code(&nncs(&["nsp", "kappa", "--matrix", &p(dir.path(), "m.txt")])), 3);
}

#[test]
fn nsp_reports_on_identity() {
    let dir = tempfile::tempdir().unwrap();
    let m = p(dir.path(), "i.txt");
    assert_eq!(code(&nncs(&["gen", "--kind", "identity", "--m", "4", "--n", "4", "--seed", "0", "--out", &m])), 0);
    let exact = nncs(&["nsp", "l1-exact", "--matrix", &m, "--s", "2"]);
    assert_eq!(code(&exact), 0);
    assert_eq!(kv(&exact, "status").as_deref(), Some("holds"));
    let mplus = nncs(&["nsp", "mplus", "--matrix", &m]);
    assert_eq!(kv(&mplus, "kappa_w").map(|v| v.parse::<f64>().unwrap().round()), Some(1.0));
    let est = nncs(&["nsp", "l2-estimate", "--matrix", &m, "--s", "1", "--rho", "0.5", "--seed", "1", "--restarts", "5"]);
    assert_eq!(code(&est), 0);
    assert_eq!(kv(&est, "status").as_deref(), Some("holds"));
    assert_eq!(code(&nncs(&["nsp", "w", "--matrix", &m])), 0);
}

#[test]
fn exact_nsp_guard_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = p(dir.path(), "a.txt");
    assert_eq!(code(&nncs(&["gen", "--kind", "gaussian", "--m", "10", "--n", "30", "--seed", "0", "--out", &m])), 0);
    assert_eq!(code(&nncs(&["nsp", "l1-exact", "--matrix", &m, "--s", "1"])), 64);
}

#[test]
fn bounds_example() {
    let out = nncs(&["theory", "bounds", "--n", "1000", "--m", "200", "--s", "10", "--p", "0.5", "--rho", "0.5"]);
    assert_eq!(code(&out), 0);
    assert_eq!(kv(&out, "theta").as_deref(), Some("0.5"));
    assert_eq!(kv(&out, "alpha").as_deref(), Some("32"));
    assert_eq!(kv(&out, "beta").as_deref(), Some("1"));
    assert_eq!(kv(&out, "m_required").as_deref(), Some("8455"));
    let bern: f64 = kv(&out, "bernstein_fail_prob").unwrap().parse().unwrap();
    assert!((bern / 7.2e-6 - 1.0).abs() < 0.01, "{bern}");
}

#[test]
fn bounds_reject_bad_probability() {
    let out = nncs(&["theory", "bounds", "--n", "10", "--m", "5", "--s", "1", "--p", "1.5", "--rho", "0.5"]);
    assert_eq!(code(&out), 64);
}

#[test]
fn verify_passes_and_forced_violation_exits_four() {
    let ok = nncs(&["theory", "verify", "variance", "--p", "0.3", "--seed", "1", "--trials", "20000"]);
    assert_eq!(code(&ok), 0);
    assert_eq!(kv(&ok, "pass").as_deref(), Some("true"));
    // one draw has zero sample variance and zero standard error
    let bad = nncs(&["theory", "verify", "variance", "--p", "0.3", "--seed", "1", "--trials", "1"]);
    assert_eq!(code(&bad), 4);
    assert_eq!(code(&nncs(&["theory", "verify", "tail", "--p", "0.5", "--seed", "2", "--trials", "20000"])), 0);
    assert_eq!(code(&nncs(&["theory", "verify", "wm", "--p", "0.5", "--seed", "2", "--trials", "200", "--n", "12"])), 0);
    assert_eq!(code(&nncs(&["theory", "verify", "wm", "--p", "0.5", "--trials", "0"])), 64);
}

#[test]
fn replay_from_header_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (p(dir.path(), "a"), p(dir.path(), "b"));
    let first = nncs(&["exp", "phase", "--out-dir", &a, "--trials", "30", "--n-max", "25", "--grid", "3", "--seed", "4"]);
    assert_eq!(code(&first), 0);
    let trials = dir.path().join("a/phase_trials.csv");
    let again = nncs(&["exp", "run", "--config", trials.to_str().unwrap(), "--out-dir", &b]);
    assert_eq!(code(&again), 0);
    for f in ["phase_trials.csv", "phase_summary.csv", "phase_heatmap.svg"] {
        let x = fs::read(dir.path().join("a").join(f)).unwrap();
        let y = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn jobs_do_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    for (jobs, sub) in [("1", "one"), ("4", "four")] {
        let out = nncs(&["--jobs", jobs, "exp", "noisy", "--out-dir", &p(dir.path(), sub), "--n", "20", "--trials-per-cell", "2", "--seed", "3"]);
        assert_eq!(code(&out), 0);
    }
    let x = fs::read(dir.path().join("one/noisy_trials.csv")).unwrap();
    assert_eq!(x, fs::read(dir.path().join("four/noisy_trials.csv")).unwrap());
    assert_eq!(code(&nncs(&["--jobs", "0", "exp", "noisy", "--out-dir", &p(dir.path(), "z")])), 64);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let ini = dir.path().join("u.ini");
    fs::write(&ini, "[uniform]\nn = 30\nm_list = 15,25\ns = 2\nvectors = 3\nrepetitions = 2\nseed = 4\n").unwrap();
    let out = nncs(&["exp", "run", "--config", ini.to_str().unwrap(), "--out-dir", &p(dir.path(), "o"), "--s", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("o/uniform_summary.csv")).unwrap();
    assert!(summary.contains("#! s=3\n") && summary.contains("#! n=30\n"));
    let clash = nncs(&["exp", "phase", "--config", ini.to_str().unwrap(), "--out-dir", &p(dir.path(), "c")]);
    assert_eq!(code(&clash), 64);
    fs::write(&ini, "[uniform]\nbogus = 1\n").unwrap();
    assert_eq!(code(&nncs(&["exp", "run", "--config", ini.to_str().unwrap(), "--out-dir", &p(dir.path(), "d")])), 64);
}

#[test]
fn error_bound_experiment_reports_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = nncs(&["exp", "error-bound", "--out-dir", &p(dir.path(), "e"), "--trials", "4", "--seed", "2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(kv(&out, "passed").as_deref(), Some("true"));
}
