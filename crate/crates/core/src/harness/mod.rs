//! Experiment runner and result reporting.

mod report;

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::instances::{GeneratorSpec, InstanceError};
use crate::model::{load_problem, ModelError, Problem};
use crate::propagation::{RevisionPolicy, Scheme};
use crate::search::{solve, RestartPolicy, SearchConfig, SearchError, SearchResult, ValueOrder};
use crate::vorder::{VOHeuristic, VOrderError};

pub use report::{
    dependency_report, format_dependency, format_table, read_csv, variance, write_csv, DependencyRow,
    DEPENDENCY_POLICIES,
};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("cannot read {}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("experiment spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("{source_name}: {error}")]
    Model { source_name: String, error: ModelError },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Heuristic(#[from] VOrderError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("variance of an empty list")]
    Empty,
}

fn default_schemes() -> Vec<String> {
    vec!["var".into()]
}
fn default_revisions() -> Vec<String> {
    vec!["fifo".into()]
}
fn default_restarts() -> Vec<String> {
    vec!["geo:10:1.5".into()]
}
fn default_value_orders() -> Vec<String> {
    vec!["lex".into()]
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_timeout() -> f64 {
    3600.0
}

/// A cross-product of instances and solver configurations.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Instance files (relative to the spec file) or generator specs.
    pub instances: Vec<String>,
    pub var_heuristics: Vec<String>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<String>,
    #[serde(default = "default_revisions")]
    pub revision_policies: Vec<String>,
    #[serde(default = "default_restarts")]
    pub restarts: Vec<String>,
    #[serde(default = "default_value_orders")]
    pub value_orders: Vec<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Per-run limit in seconds.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let nonempty = [
            ("instances", self.instances.len()),
            ("var_heuristics", self.var_heuristics.len()),
            ("schemes", self.schemes.len()),
            ("revision_policies", self.revision_policies.len()),
            ("restarts", self.restarts.len()),
            ("value_orders", self.value_orders.len()),
            ("seeds", self.seeds.len()),
        ];
        for (name, len) in nonempty {
            if len == 0 {
                return Err(HarnessError::Invalid(format!("`{name}` is empty")));
            }
        }
        if !(self.timeout >= 0.0) || !self.timeout.is_finite() {
            return Err(HarnessError::Invalid(format!("timeout {} is not a duration", self.timeout)));
        }
        Ok(())
    }
}

/// One CSV record. Counts are floating point so that seed averages fit.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ResultRow {
    pub instance: String,
    pub scheme: String,
    pub var_heur: String,
    pub rev_heur: String,
    pub restart: String,
    pub value_order: String,
    pub seed: String,
    pub result: String,
    pub time_ms: f64,
    pub nodes: f64,
    pub checks: f64,
    pub revisions: f64,
    pub dwos: f64,
}

/// Seed label of aggregated rows.
pub const AVERAGE_SEED: &str = "avg";

/// Resolves a generator spec or a native instance file.
pub fn load_instance(source: &str, base_dir: &Path) -> Result<Problem, HarnessError> {
    let path = base_dir.join(source);
    match source.parse::<GeneratorSpec>() {
        Ok(g) => return Ok(g.generate()?),
        Err(e) if !path.exists() && source.contains('=') => return Err(e.into()),
        Err(_) => {}
    }
    let text = std::fs::read_to_string(&path).map_err(|source| HarnessError::Io {
        path: path.clone(),
        source,
    })?;
    load_problem(&text).map_err(|error| HarnessError::Model {
        source_name: path.display().to_string(),
        error,
    })
}

struct Config {
    scheme: Scheme,
    heuristic: VOHeuristic,
    revision: RevisionPolicy,
    restart: RestartPolicy,
    value_order: ValueOrder,
}

fn parse_all<T, E: std::fmt::Display>(items: &[String], what: &str) -> Result<Vec<T>, HarnessError>
where
    T: std::str::FromStr<Err = E>,
{
    items
        .iter()
        .map(|s| {
            s.parse()
                .map_err(|e| HarnessError::Invalid(format!("{what} `{s}`: {e}")))
        })
        .collect()
}

/// Configurations in cross-product order: scheme, variable heuristic,
/// revision policy, restart, value order. Scheme/policy pairs that cannot
/// run together are skipped with a warning.
fn configurations(spec: &ExperimentSpec) -> Result<Vec<Config>, HarnessError> {
    let schemes: Vec<Scheme> = parse_all(&spec.schemes, "scheme")?;
    let heuristics: Vec<VOHeuristic> = parse_all(&spec.var_heuristics, "variable heuristic")?;
    let revisions: Vec<RevisionPolicy> = parse_all(&spec.revision_policies, "revision policy")?;
    let restarts: Vec<RestartPolicy> = parse_all(&spec.restarts, "restart policy")?;
    let orders: Vec<ValueOrder> = parse_all(&spec.value_orders, "value order")?;
    let mut out = Vec::new();
    for &scheme in &schemes {
        for &heuristic in &heuristics {
            for &revision in &revisions {
                if !revision.supports(scheme) {
                    log::warn!("skipping revision policy {revision} under the {scheme} scheme");
                    continue;
                }
                for &restart in &restarts {
                    for &value_order in &orders {
                        out.push(Config {
                            scheme,
                            heuristic,
                            revision,
                            restart,
                            value_order,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn run_one(p: &Problem, instance: &str, cfg: &Config, seed: u64, timeout: Duration) -> Result<ResultRow, HarnessError> {
    let sc = SearchConfig {
        var_heuristic: cfg.heuristic,
        scheme: cfg.scheme,
        revision: cfg.revision,
        restart: cfg.restart,
        value_order: cfg.value_order,
        timeout,
        ..SearchConfig::default()
    }
    .with_seed(seed);
    let out = solve(p, &sc)?;
    let s = out.stats;
    Ok(ResultRow {
        instance: instance.to_string(),
        scheme: cfg.scheme.to_string(),
        var_heur: cfg.heuristic.to_string(),
        rev_heur: cfg.revision.to_string(),
        restart: cfg.restart.to_string(),
        value_order: cfg.value_order.to_string(),
        seed: seed.to_string(),
        result: match &out.result {
            SearchResult::Sat(_) => "sat",
            SearchResult::Unsat => "unsat",
            SearchResult::Timeout => "timeout",
        }
        .to_string(),
        time_ms: s.time.as_secs_f64() * 1000.0,
        nodes: s.nodes as f64,
        checks: s.checks as f64,
        revisions: s.revisions as f64,
        dwos: s.dwos as f64,
    })
}

/// Arithmetic mean of per-seed rows, labelled with [`AVERAGE_SEED`].
pub fn average_rows(rows: &[ResultRow]) -> Option<ResultRow> {
    let first = rows.first()?;
    let n = rows.len() as f64;
    let mean = |f: fn(&ResultRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let result = if rows.iter().all(|r| r.result == first.result) {
        first.result.clone()
    } else {
        "mixed".to_string()
    };
    Some(ResultRow {
        seed: AVERAGE_SEED.to_string(),
        result,
        time_ms: mean(|r| r.time_ms),
        nodes: mean(|r| r.nodes),
        checks: mean(|r| r.checks),
        revisions: mean(|r| r.revisions),
        dwos: mean(|r| r.dwos),
        ..first.clone()
    })
}

/// Runs every instance against every configuration. Randomised
/// configurations run once per seed and get an extra averaged row;
/// deterministic ones run once with the first seed.
pub fn run_experiment(spec: &ExperimentSpec, base_dir: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    spec.validate()?;
    let configs = configurations(spec)?;
    let timeout = Duration::from_secs_f64(spec.timeout);
    let mut rows = Vec::new();
    for source in &spec.instances {
        let p = load_instance(source, base_dir)?;
        for cfg in &configs {
            let randomized = cfg.value_order == ValueOrder::Random || cfg.heuristic.is_randomized();
            if randomized {
                let mut per_seed = Vec::with_capacity(spec.seeds.len());
                for &seed in &spec.seeds {
                    per_seed.push(run_one(&p, source, cfg, seed, timeout)?);
                }
                let avg = average_rows(&per_seed);
                rows.extend(per_seed);
                rows.extend(avg);
            } else {
                rows.push(run_one(&p, source, cfg, spec.seeds[0], timeout)?);
            }
            log::info!("{source}: {} rows so far", rows.len());
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(json: &str) -> ExperimentSpec {
        ExperimentSpec::from_json(json).unwrap()
    }

    #[test]
    fn cross_product_size() {
        let s = spec(
            r#"{"instances": ["queens:n=5", "langford:k=2,n=3"],
                "var_heuristics": ["dom", "dom/wdeg", "wdeg"]}"#,
        );
        let rows = run_experiment(&s, Path::new(".")).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].instance, "queens:n=5");
        assert_eq!(rows[1].var_heur, "dom/wdeg");
        assert!(rows.iter().all(|r| r.result == "sat"));
    }

    #[test]
    fn mismatched_policies_are_skipped() {
        let s = spec(
            r#"{"instances": ["queens:n=4"], "var_heuristics": ["dom/wdeg"],
                "schemes": ["arc", "con"], "revision_policies": ["fifo", "a_wdeg", "c_wcon"]}"#,
        );
        let rows = run_experiment(&s, Path::new(".")).unwrap();
        let combos: Vec<_> = rows.iter().map(|r| (r.scheme.as_str(), r.rev_heur.as_str())).collect();
        assert_eq!(combos, vec![("arc", "fifo"), ("arc", "a_wdeg"), ("con", "fifo"), ("con", "c_wcon")]);
    }

    #[test]
    fn random_orders_get_per_seed_and_average_rows() {
        let s = spec(
            r#"{"instances": ["queens:n=6"], "var_heuristics": ["dom"],
                "value_orders": ["lex", "rand"], "seeds": [1, 2, 3]}"#,
        );
        let rows = run_experiment(&s, Path::new(".")).unwrap();
        let seeds: Vec<_> = rows.iter().map(|r| r.seed.as_str()).collect();
        assert_eq!(seeds, vec!["1", "1", "2", "3", "avg"]);
        let mean = (rows[1].nodes + rows[2].nodes + rows[3].nodes) / 3.0;
        assert!((rows[4].nodes - mean).abs() < 1e-9);
    }

    #[test]
    fn timeouts_are_rows() {
        let s = spec(r#"{"instances": ["langford:k=2,n=9"], "var_heuristics": ["dom"], "timeout": 0}"#);
        let rows = run_experiment(&s, Path::new(".")).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].result, "timeout");
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ExperimentSpec::from_json(r#"{"instances": [], "var_heuristics": ["dom"]}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"instances": ["queens:n=4"], "var_heuristics": []}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"instances": ["q"], "var_heuristics": ["dom"], "extra": 1}"#).is_err());
        let s = spec(r#"{"instances": ["queens:n=4"], "var_heuristics": ["bogus"]}"#);
        assert!(run_experiment(&s, Path::new(".")).is_err());
    }
}
