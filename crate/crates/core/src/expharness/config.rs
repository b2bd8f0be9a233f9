use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use ini::Ini;

use super::error_bound::BOUND_COLUMNS;
use super::noisy::CELL_COLUMNS;
use super::phase::GRID_COLUMNS;
use super::uniform::UNIFORM_COLUMNS;
use super::{
    provenance_header, render_heatmap, run_error_bound_check, run_gaussian_comparison, run_noisy_comparison,
    run_phase_transition, table_csv_string, trials_csv_string, BoundCheckStatus, ErrorBoundConfig, EtaPolicy, ExpError,
    NoisyConfig, PhaseConfig, UniformConfig,
};

/// Flat `key=value` settings for one experiment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// INI text; keys of all sections are merged, and a section name stands
    /// in for a missing `experiment` key.
    pub fn parse_ini(text: &str) -> Result<Self, ExpError> {
        let ini = Ini::load_from_str(text).map_err(|e| ExpError::Config(e.to_string()))?;
        let mut map = Self::new();
        let mut section_name = None;
        for (section, props) in ini.iter() {
            if let Some(name) = section {
                section_name.get_or_insert_with(|| name.to_string());
            }
            for (k, v) in props.iter() {
                map.set(k, v);
            }
        }
        if let (None, Some(name)) = (map.get("experiment"), section_name) {
            map.set("experiment", &name);
        }
        Ok(map)
    }

    /// Either an INI file or any output carrying a `#! key=value` header.
    pub fn load(text: &str) -> Result<Self, ExpError> {
        let logged: Vec<&str> = text.lines().filter_map(|l| l.strip_prefix("#!")).map(str::trim).collect();
        if logged.is_empty() {
            Self::parse_ini(text)
        } else {
            Self::parse_ini(&logged.join("\n"))
        }
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.trim().to_string(), value.trim().to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Entries of `other` replace entries of `self`.
    pub fn merge(&mut self, other: &ConfigMap) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn take<T: FromStr>(&self, key: &str, default: T) -> Result<T, ExpError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ExpError::Config(format!("invalid value `{v}` for `{key}`"))),
        }
    }

    fn take_list<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>, ExpError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| ExpError::Config(format!("invalid list entry `{t}` for `{key}`"))))
                .collect(),
        }
    }

    fn reject_unknown(&self, known: &[&str]) -> Result<(), ExpError> {
        match self.keys().find(|k| *k != "experiment" && !known.contains(k)) {
            Some(k) => Err(ExpError::Config(format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

fn list<T: Display>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn kv(pairs: Vec<(&str, String)>) -> Vec<(String, String)> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentConfig {
    Phase(PhaseConfig),
    Noisy(NoisyConfig),
    Uniform(UniformConfig),
    ErrorBound(ErrorBoundConfig),
}

pub const EXPERIMENTS: [&str; 4] = ["phase", "noisy", "uniform", "error_bound"];

const PHASE_KEYS: [&str; 9] = ["trials", "n_min", "n_max", "m_min", "s_min", "p", "grid", "seed", "timing"];
const NOISY_KEYS: [&str; 9] = ["n", "deltas", "rs", "trials_per_cell", "sigma", "p", "eta", "seed", "timing"];
const UNIFORM_KEYS: [&str; 8] = ["n", "m_list", "s", "vectors", "repetitions", "p", "seed", "timing"];
const BOUND_KEYS: [&str; 9] = ["n", "m", "s", "p", "sigma", "trials", "rho", "restarts", "seed"];

/// Rendered outputs of one experiment, each starting with the provenance
/// header.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub trials_csv: String,
    pub summary_csv: String,
    pub svg: Option<String>,
    /// `Some(false)` when a built-in check was violated.
    pub passed: Option<bool>,
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Phase(_) => "phase",
            Self::Noisy(_) => "noisy",
            Self::Uniform(_) => "uniform",
            Self::ErrorBound(_) => "error_bound",
        }
    }

    /// Keys accepted by the named experiment.
    pub fn keys_for(experiment: &str) -> Option<&'static [&'static str]> {
        match experiment {
            "phase" => Some(&PHASE_KEYS),
            "noisy" => Some(&NOISY_KEYS),
            "uniform" => Some(&UNIFORM_KEYS),
            "error_bound" => Some(&BOUND_KEYS),
            _ => None,
        }
    }

    pub fn from_map(map: &ConfigMap) -> Result<Self, ExpError> {
        let name = map.get("experiment").ok_or_else(|| ExpError::Config("missing `experiment` key".into()))?;
        let keys = Self::keys_for(name).ok_or_else(|| {
            ExpError::Config(format!("unknown experiment `{name}` (expected one of {})", EXPERIMENTS.join(", ")))
        })?;
        map.reject_unknown(keys)?;
        Ok(match name {
            "phase" => {
                let d = PhaseConfig::default();
                Self::Phase(PhaseConfig {
                    trials: map.take("trials", d.trials)?,
                    n_min: map.take("n_min", d.n_min)?,
                    n_max: map.take("n_max", d.n_max)?,
                    m_min: map.take("m_min", d.m_min)?,
                    s_min: map.take("s_min", d.s_min)?,
                    p: map.take("p", d.p)?,
                    grid: map.take("grid", d.grid)?,
                    seed: map.take("seed", d.seed)?,
                    timing: map.take("timing", d.timing)?,
                })
            }
            "noisy" => {
                let d = NoisyConfig::default();
                Self::Noisy(NoisyConfig {
                    n: map.take("n", d.n)?,
                    deltas: map.take_list("deltas", d.deltas)?,
                    rs: map.take_list("rs", d.rs)?,
                    trials_per_cell: map.take("trials_per_cell", d.trials_per_cell)?,
                    sigma: map.take("sigma", d.sigma)?,
                    p: map.take("p", d.p)?,
                    eta: map.get("eta").map_or(Ok(d.eta), EtaPolicy::parse)?,
                    seed: map.take("seed", d.seed)?,
                    timing: map.take("timing", d.timing)?,
                })
            }
            "uniform" => {
                let d = UniformConfig::default();
                Self::Uniform(UniformConfig {
                    n: map.take("n", d.n)?,
                    m_list: map.take_list("m_list", d.m_list)?,
                    s: map.take("s", d.s)?,
                    vectors_per_matrix: map.take("vectors", d.vectors_per_matrix)?,
                    repetitions: map.take("repetitions", d.repetitions)?,
                    p: map.take("p", d.p)?,
                    seed: map.take("seed", d.seed)?,
                    timing: map.take("timing", d.timing)?,
                })
            }
            _ => {
                let d = ErrorBoundConfig::default();
                Self::ErrorBound(ErrorBoundConfig {
                    n: map.take("n", d.n)?,
                    m: map.take("m", d.m)?,
                    s: map.take("s", d.s)?,
                    p: map.take("p", d.p)?,
                    sigma: map.take("sigma", d.sigma)?,
                    trials: map.take("trials", d.trials)?,
                    rho: map.take("rho", d.rho)?,
                    restarts: map.take("restarts", d.restarts)?,
                    seed: map.take("seed", d.seed)?,
                })
            }
        })
    }

    /// Fully resolved settings, `experiment` first.
    pub fn to_kv(&self) -> Vec<(String, String)> {
        let mut out = vec![("experiment".to_string(), self.name().to_string())];
        out.extend(match self {
            Self::Phase(c) => kv(vec![
                ("trials", c.trials.to_string()),
                ("n_min", c.n_min.to_string()),
                ("n_max", c.n_max.to_string()),
                ("m_min", c.m_min.to_string()),
                ("s_min", c.s_min.to_string()),
                ("p", c.p.to_string()),
                ("grid", c.grid.to_string()),
                ("seed", c.seed.to_string()),
                ("timing", c.timing.to_string()),
            ]),
            Self::Noisy(c) => kv(vec![
                ("n", c.n.to_string()),
                ("deltas", list(&c.deltas)),
                ("rs", list(&c.rs)),
                ("trials_per_cell", c.trials_per_cell.to_string()),
                ("sigma", c.sigma.to_string()),
                ("p", c.p.to_string()),
                ("eta", c.eta.label()),
                ("seed", c.seed.to_string()),
                ("timing", c.timing.to_string()),
            ]),
            Self::Uniform(c) => kv(vec![
                ("n", c.n.to_string()),
                ("m_list", list(&c.m_list)),
                ("s", c.s.to_string()),
                ("vectors", c.vectors_per_matrix.to_string()),
                ("repetitions", c.repetitions.to_string()),
                ("p", c.p.to_string()),
                ("seed", c.seed.to_string()),
                ("timing", c.timing.to_string()),
            ]),
            Self::ErrorBound(c) => kv(vec![
                ("n", c.n.to_string()),
                ("m", c.m.to_string()),
                ("s", c.s.to_string()),
                ("p", c.p.to_string()),
                ("sigma", c.sigma.to_string()),
                ("trials", c.trials.to_string()),
                ("rho", c.rho.to_string()),
                ("restarts", c.restarts.to_string()),
                ("seed", c.seed.to_string()),
            ]),
        });
        out
    }

    pub fn header(&self) -> String {
        provenance_header(&self.to_kv())
    }

    pub fn run(&self) -> Result<ExperimentOutput, ExpError> {
        let header = self.header();
        Ok(match self {
            Self::Phase(c) => {
                let run = run_phase_transition(c)?;
                ExperimentOutput {
                    trials_csv: trials_csv_string(&header, &run.records)?,
                    summary_csv: table_csv_string(&header, &GRID_COLUMNS, &run.grid.rows())?,
                    svg: Some(render_heatmap(&run.grid)?),
                    passed: None,
                }
            }
            Self::Noisy(c) => {
                let run = run_noisy_comparison(c)?;
                let rows: Vec<_> = run.cells.iter().map(|s| s.row()).collect();
                ExperimentOutput {
                    trials_csv: trials_csv_string(&header, &run.records)?,
                    summary_csv: table_csv_string(&header, &CELL_COLUMNS, &rows)?,
                    svg: None,
                    passed: None,
                }
            }
            Self::Uniform(c) => {
                let run = run_gaussian_comparison(c)?;
                let rows: Vec<_> = run.summaries.iter().map(|s| s.row()).collect();
                ExperimentOutput {
                    trials_csv: trials_csv_string(&header, &run.records)?,
                    summary_csv: table_csv_string(&header, &UNIFORM_COLUMNS, &rows)?,
                    svg: None,
                    passed: None,
                }
            }
            Self::ErrorBound(c) => {
                let run = run_error_bound_check(c)?;
                let rows: Vec<_> = run.rows.iter().map(|r| r.row()).collect();
                ExperimentOutput {
                    trials_csv: trials_csv_string(&header, &run.records)?,
                    summary_csv: table_csv_string(&header, &BOUND_COLUMNS, &rows)?,
                    svg: None,
                    passed: Some(run.count(BoundCheckStatus::Violated) == 0),
                }
            }
        })
    }
}
