//! Experiment matrix runner and report emission (CSV, markdown, plot data).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{mean_stderr, run_experiment, write_log, ExperimentConfig, Resources};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One (env, agent, seed) cell. Contains no timing so reruns are byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub env: String,
    pub agent: String,
    pub seed: u64,
    pub episodes: usize,
    pub mean_return: Option<f64>,
    pub sd_return: Option<f64>,
    pub normalized: Option<f64>,
    pub error: Option<String>,
    pub offline_initial: Option<usize>,
    pub offline_transition: Option<usize>,
    pub offline_observation: Option<usize>,
    pub offline_reward: Option<usize>,
    pub online_initial: Option<usize>,
    pub online_transition: Option<usize>,
    pub online_observation: Option<usize>,
    pub online_reward: Option<usize>,
    pub coverage_initial: Option<f64>,
    pub coverage_transition: Option<f64>,
    pub coverage_observation: Option<f64>,
    pub coverage_reward: Option<f64>,
}

impl Row {
    fn failed(env: &str, agent: &str, seed: u64, msg: String) -> Self {
        Row {
            env: env.into(),
            agent: agent.into(),
            seed,
            episodes: 0,
            mean_return: None,
            sd_return: None,
            normalized: None,
            error: Some(msg),
            offline_initial: None,
            offline_transition: None,
            offline_observation: None,
            offline_reward: None,
            online_initial: None,
            online_transition: None,
            online_observation: None,
            online_reward: None,
            coverage_initial: None,
            coverage_transition: None,
            coverage_observation: None,
            coverage_reward: None,
        }
    }

    fn offline(&self) -> Option<[usize; 4]> {
        Some([self.offline_initial?, self.offline_transition?, self.offline_observation?, self.offline_reward?])
    }

    fn online(&self) -> Option<[usize; 4]> {
        Some([self.online_initial?, self.online_transition?, self.online_observation?, self.online_reward?])
    }

    fn coverage(&self) -> Option<[f64; 4]> {
        Some([self.coverage_initial?, self.coverage_transition?, self.coverage_observation?, self.coverage_reward?])
    }
}

/// A matrix of environments and agents sharing one seed list.
#[derive(Debug, Clone)]
pub struct SuiteSpec {
    pub envs: Vec<String>,
    pub agents: Vec<String>,
    pub seeds: Vec<u64>,
    /// Applied to every cell after the family defaults.
    pub overrides: Vec<(String, String)>,
}

fn sd(xs: &[f64]) -> f64 {
    let (_, se) = mean_stderr(xs);
    se * (xs.len() as f64).sqrt()
}

fn cell_config(spec: &SuiteSpec, env: &str, agent: &str, seed: u64) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::for_env(env, agent).map_err(|e| e.to_string())?;
    for (k, v) in &spec.overrides {
        cfg.set(k, v).map_err(|e| e.to_string())?;
    }
    cfg.seeds = vec![seed];
    Ok(cfg)
}

/// Runs every cell. Failures are recorded in the row and the suite moves on.
/// Learning logs go to `<log_dir>/<env>-<agent>-seed<n>.jsonl` when given.
pub fn run_suite(spec: &SuiteSpec, res: Resources<'_>, log_dir: Option<&Path>) -> Result<Vec<Row>, SuiteError> {
    let mut rows = Vec::new();
    for env in &spec.envs {
        for agent in &spec.agents {
            for &seed in &spec.seeds {
                let report = cell_config(spec, env, agent, seed)
                    .and_then(|cfg| run_experiment(&cfg, res).map_err(|e| e.to_string()));
                let report = match report {
                    Ok(r) => r,
                    Err(msg) => {
                        rows.push(Row::failed(env, agent, seed, msg));
                        continue;
                    }
                };
                if let (Some(dir), false) = (log_dir, report.log.is_empty()) {
                    write_log(&dir.join(format!("{env}-{agent}-seed{seed}.jsonl")), &report.log)?;
                }
                let returns: Vec<f64> = report.episodes.iter().map(|e| e.ret).collect();
                let errors: Vec<String> = report
                    .episodes
                    .iter()
                    .filter_map(|e| e.error.as_ref().map(|m| format!("episode {}: {m}", e.episode)))
                    .collect();
                let mut row = Row::failed(env, agent, seed, String::new());
                row.episodes = returns.len();
                row.mean_return = Some(report.mean);
                row.sd_return = Some(sd(&returns));
                row.error = (!errors.is_empty()).then(|| errors.join("; "));
                if let Some(n) = &report.nodes {
                    let [a, b, c, d] = n.offline[0];
                    (row.offline_initial, row.offline_transition, row.offline_observation, row.offline_reward) =
                        (Some(a), Some(b), Some(c), Some(d));
                    let [a, b, c, d] = n.online[0];
                    (row.online_initial, row.online_transition, row.online_observation, row.online_reward) =
                        (Some(a), Some(b), Some(c), Some(d));
                    let cov = n.final_coverage[0].map(|x| (!x.is_nan()).then_some(x));
                    [row.coverage_initial, row.coverage_transition, row.coverage_observation, row.coverage_reward] = cov;
                }
                rows.push(row);
            }
        }
    }
    normalize(&mut rows);
    Ok(rows)
}

/// Pooled mean, standard error and episode count over successful rows.
fn pooled(rows: &[&Row]) -> Option<(f64, f64, usize)> {
    let groups: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.episodes > 0)
        .filter_map(|r| Some((r.episodes as f64, r.mean_return?, r.sd_return?)))
        .collect();
    let n: f64 = groups.iter().map(|g| g.0).sum();
    if n == 0.0 {
        return None;
    }
    let mean = groups.iter().map(|g| g.0 * g.1).sum::<f64>() / n;
    if n < 2.0 {
        return Some((mean, 0.0, n as usize));
    }
    let ss: f64 = groups.iter().map(|&(k, m, s)| (k - 1.0) * s * s + k * (m - mean).powi(2)).sum();
    Some((mean, (ss / (n - 1.0) / n).sqrt(), n as usize))
}

fn oracle_means(rows: &[Row]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for env in rows.iter().map(|r| r.env.clone()) {
        let oracle: Vec<&Row> = rows.iter().filter(|r| r.env == env && r.agent == "oracle").collect();
        if let Some((m, _, _)) = pooled(&oracle) {
            out.insert(env, m);
        }
    }
    out
}

/// Divides each row mean by its environment's pooled oracle mean.
pub fn normalize(rows: &mut [Row]) {
    let oracle = oracle_means(rows);
    for r in rows.iter_mut() {
        r.normalized = match (r.mean_return, oracle.get(&r.env)) {
            (Some(m), Some(&o)) if o != 0.0 => Some(m / o),
            _ => None,
        };
    }
}

pub fn write_csv<W: std::io::Write>(w: W, rows: &[Row]) -> Result<(), SuiteError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(r: R) -> Result<Vec<Row>, SuiteError> {
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Normalized bar-chart data, one bar per (env, agent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub env: String,
    pub agent: String,
    pub mean: f64,
    pub stderr: f64,
    pub normalized_mean: Option<f64>,
    pub normalized_stderr: Option<f64>,
    pub episodes: usize,
    pub failed_seeds: usize,
}

fn keys(rows: &[Row]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for r in rows {
        let k = (r.env.clone(), r.agent.clone());
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

pub fn bars(rows: &[Row]) -> Vec<Bar> {
    let oracle = oracle_means(rows);
    keys(rows)
        .into_iter()
        .map(|(env, agent)| {
            let cell: Vec<&Row> = rows.iter().filter(|r| r.env == env && r.agent == agent).collect();
            let failed_seeds = cell.iter().filter(|r| r.episodes == 0).count();
            let (mean, stderr, episodes) = pooled(&cell).unwrap_or((f64::NAN, f64::NAN, 0));
            let o = oracle.get(&env).copied().filter(|&o| o != 0.0 && episodes > 0);
            let (normalized_mean, normalized_stderr) = match (agent.as_str(), o) {
                ("oracle", Some(_)) => (Some(1.0), Some(stderr / mean.abs())),
                (_, Some(o)) => (Some(mean / o), Some(stderr / o.abs())),
                _ => (None, None),
            };
            Bar { env, agent, mean, stderr, normalized_mean, normalized_stderr, episodes, failed_seeds }
        })
        .collect()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:.3}"))
}

fn mean_se_usize(xs: &[usize]) -> String {
    let v: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
    let (m, s) = mean_stderr(&v);
    format!("{m:.2} ± {s:.2}")
}

pub fn summary_markdown(rows: &[Row]) -> String {
    let mut s = String::from("# Results\n\n| env | agent | return | normalized | episodes | failed seeds |\n|---|---|---|---|---|---|\n");
    for b in bars(rows) {
        let norm = match (b.normalized_mean, b.normalized_stderr) {
            (Some(m), Some(e)) => format!("{m:.3} ± {e:.3}"),
            _ => "n/a".into(),
        };
        let _ = writeln!(
            s,
            "| {} | {} | {:.3} ± {:.3} | {} | {} | {} |",
            b.env, b.agent, b.mean, b.stderr, norm, b.episodes, b.failed_seeds
        );
    }

    let learned: Vec<(String, String)> =
        keys(rows).into_iter().filter(|(e, a)| rows.iter().any(|r| &r.env == e && &r.agent == a && r.offline().is_some())).collect();
    if !learned.is_empty() {
        s.push_str("\n## Nodes created\n\n| env | agent | phase | initial | transition | observation | reward |\n|---|---|---|---|---|---|---|\n");
        for (env, agent) in &learned {
            let cell: Vec<&Row> = rows.iter().filter(|r| &r.env == env && &r.agent == agent).collect();
            for (phase, counts) in [
                ("offline", cell.iter().filter_map(|r| r.offline()).collect::<Vec<_>>()),
                ("online", cell.iter().filter_map(|r| r.online()).collect()),
            ] {
                let cols: Vec<String> = (0..4).map(|i| mean_se_usize(&counts.iter().map(|c| c[i]).collect::<Vec<_>>())).collect();
                let _ = writeln!(s, "| {env} | {agent} | {phase} | {} |", cols.join(" | "));
            }
        }
        s.push_str("\n## Final coverage\n\n| env | agent | initial | transition | observation | reward |\n|---|---|---|---|---|---|\n");
        for (env, agent) in &learned {
            let covs: Vec<[f64; 4]> =
                rows.iter().filter(|r| &r.env == env && &r.agent == agent).filter_map(|r| r.coverage()).collect();
            let cols: Vec<String> = (0..4)
                .map(|i| {
                    let v: Vec<f64> = covs.iter().map(|c| c[i]).collect();
                    if v.is_empty() {
                        return fmt_opt(None);
                    }
                    let (m, e) = mean_stderr(&v);
                    format!("{m:.2} ± {e:.2}")
                })
                .collect();
            let _ = writeln!(s, "| {env} | {agent} | {} |", cols.join(" | "));
        }
    }

    let failures: Vec<&Row> = rows.iter().filter(|r| r.error.is_some()).collect();
    if !failures.is_empty() {
        s.push_str("\n## Errors\n\n");
        for r in failures {
            let _ = writeln!(s, "- {} / {} / seed {}: {}", r.env, r.agent, r.seed, r.error.as_deref().unwrap_or(""));
        }
    }
    s
}

/// Writes `results.csv`, `summary.md` and `plot.json` into `dir`.
pub fn write_reports(dir: &Path, rows: &[Row]) -> Result<(), SuiteError> {
    std::fs::create_dir_all(dir)?;
    write_csv(std::fs::File::create(dir.join("results.csv"))?, rows)?;
    std::fs::write(dir.join("summary.md"), summary_markdown(rows))?;
    std::fs::write(dir.join("plot.json"), serde_json::to_string_pretty(&bars(rows))?)?;
    Ok(())
}
