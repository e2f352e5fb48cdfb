//! Episode runner, the learn-plan-act outer loop, and experiment reports.

pub mod agents;
pub mod config;
pub mod suite;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use pomdp_core::seed::{mix, mix2};
use pomdp_core::{Dataset, TransitionRecord, Value};
use serde::Serialize;
use thiserror::Error;

use crate::baselines::{BcPolicy, TabularModels};
use crate::envs::{collect_demos, collect_into, Env, EnvError};
use crate::learner::{LearnError, Learner, NodeLog};
use crate::model::{ModelSet, WorldModel};
use crate::proposer::{Completer, EndpointConfig, HttpProposer, Proposer, ScriptedProposer};
use agents::{Agent, BcAgent, DirectLlmAgent, PlanningAgent, RandomAgent};
pub use config::{ConfigError, ExperimentConfig, ProposerChoice, AGENT_IDS};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("seed {seed}, {}: {source}", match .episode { Some(e) => format!("after episode {e}"), None => "offline learning".to_string() })]
    Learn { seed: u64, episode: Option<usize>, source: LearnError },
    #[error("agent '{0}' needs a completion endpoint")]
    NoCompleter(String),
    #[error("loading scripted programs: {0}")]
    Io(#[from] std::io::Error),
}

/// `sum_t gamma^t r_t` with `t` starting at 0.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().enumerate().map(|(t, r)| gamma.powi(t as i32) * r).sum()
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub ret: f64,
    /// Full transitions with post-hoc true states. `episode_id` is 0.
    pub steps: Vec<TransitionRecord>,
    pub reset_observation: Value,
    /// Set when the agent failed mid-episode; `ret` covers the steps taken.
    pub error: Option<String>,
}

impl Episode {
    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|r| r.reward).collect()
    }

    pub fn reached_done(&self) -> bool {
        self.steps.last().is_some_and(|r| r.done)
    }
}

/// Runs one episode until `done` or `max_steps`.
pub fn run_episode(env: &mut Env, agent: &mut dyn Agent, gamma: f64, max_steps: usize, seed: u64) -> Episode {
    let (_, o0) = env.reset(mix(seed, 0));
    let mut ep = Episode { ret: 0.0, steps: Vec::new(), reset_observation: o0.clone(), error: None };
    if let Err(e) = agent.begin(&o0, mix(seed, 1)) {
        ep.error = Some(e.to_string());
        return ep;
    }
    let mut discount = 1.0;
    while !env.is_done() && env.t() < max_steps {
        let s = env.state().expect("reset").clone();
        let a = match agent.act(&s) {
            Ok(a) => a,
            Err(e) => {
                ep.error = Some(e.to_string());
                break;
            }
        };
        let st = env.step(a).expect("agents return valid actions");
        ep.ret += discount * st.reward;
        discount *= gamma;
        ep.steps.push(TransitionRecord {
            episode_id: 0,
            step: ep.steps.len() as u64,
            state: s,
            action: a,
            observation: st.observation.clone(),
            reward: st.reward,
            next_state: st.next_state,
            done: st.done,
        });
        if st.done {
            break;
        }
        if let Err(e) = agent.observe(a, &st.observation, st.reward) {
            ep.error = Some(e.to_string());
            break;
        }
    }
    ep
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Offline,
    Online,
}

/// One line of the learning log.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogRecord {
    /// A call of the all-components model update.
    Learn {
        phase: Phase,
        seed: u64,
        episode: Option<usize>,
        dataset_records: usize,
        dataset_episodes: usize,
        created: [usize; 4],
        proposer_calls: [usize; 4],
        coverage: [f64; 4],
    },
    Node {
        phase: Phase,
        seed: u64,
        episode: Option<usize>,
        #[serde(flatten)]
        node: NodeLog,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub episode: usize,
    pub ret: f64,
    pub steps: usize,
    pub rewards: Vec<f64>,
    pub reached_done: bool,
    pub error: Option<String>,
}

/// Nodes created per component, per seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NodeCounts {
    pub offline: Vec<[usize; 4]>,
    pub online: Vec<[usize; 4]>,
    /// Pooled coverage of the final models, per seed.
    pub final_coverage: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub env: String,
    pub agent: String,
    pub episodes: Vec<EpisodeSummary>,
    pub mean: f64,
    pub stderr: f64,
    pub nodes: Option<NodeCounts>,
    #[serde(skip)]
    pub log: Vec<LogRecord>,
    pub wall_clock_secs: f64,
}

/// Mean and standard error (sample deviation over `sqrt(n)`).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// External services an experiment may use. Unset entries are built from
/// the configuration.
#[derive(Default, Clone, Copy)]
pub struct Resources<'a> {
    pub proposer: Option<&'a dyn Proposer>,
    pub completer: Option<&'a dyn Completer>,
}

/// Builds the proposer named by the configuration.
pub fn build_proposer(cfg: &ExperimentConfig) -> Result<Box<dyn Proposer>, HarnessError> {
    Ok(match &cfg.proposer {
        ProposerChoice::GroundTruth => Box::new(ScriptedProposer::ground_truth(cfg.kind())),
        ProposerChoice::Scripted(dir) => Box::new(ScriptedProposer::from_dir(dir)?),
        ProposerChoice::Http => {
            let mut p = HttpProposer::new(EndpointConfig::from_env());
            if let Some(dir) = &cfg.cache_dir {
                p = p.with_log_dir(dir.join(&cfg.env).join("llm"));
            }
            Box::new(p)
        }
    })
}

/// Demonstrations for one seed.
pub fn demonstrations(env: &mut Env, cfg: &ExperimentConfig, seed: u64) -> Dataset {
    let s = mix(seed, 100);
    match cfg.dataset_steps {
        Some(n) => {
            let mut d = Dataset::new(env.domain().schema.clone());
            collect_into(env, &mut d, usize::MAX, n, s);
            d
        }
        None => collect_demos(env, cfg.demo_episodes, s),
    }
}

fn episode_seed(seed: u64, e: usize) -> u64 {
    mix2(seed, 200, e as u64)
}

fn summary(seed: u64, e: usize, ep: &Episode) -> EpisodeSummary {
    EpisodeSummary {
        seed,
        episode: e,
        ret: ep.ret,
        steps: ep.steps.len(),
        rewards: ep.rewards(),
        reached_done: ep.reached_done(),
        error: ep.error.clone(),
    }
}

/// Runs the configured agent for every seed and episode.
pub fn run_experiment(cfg: &ExperimentConfig, res: Resources<'_>) -> Result<RunReport, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    if cfg.agent == "pomdp-coder" {
        let owned;
        let proposer = match res.proposer {
            Some(p) => p,
            None => {
                owned = build_proposer(cfg)?;
                &*owned
            }
        };
        let mut report = run_pomdp_coder(cfg, proposer)?;
        report.wall_clock_secs = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    let mut env = Env::new(&cfg.env)?;
    let n_actions = env.domain().schema.actions.len();
    let mut episodes = Vec::new();
    for &seed in &cfg.seeds {
        let mut agent: Box<dyn Agent + '_> = match cfg.agent.as_str() {
            "random" => Box::new(RandomAgent::new(n_actions)),
            "oracle" => {
                let truth: Arc<dyn WorldModel> = env.ground_truth().clone();
                Box::new(PlanningAgent::new(truth, cfg.filter, cfg.planner))
            }
            "tabular" => {
                let d = demonstrations(&mut env, cfg, seed);
                let m: Arc<dyn WorldModel> = Arc::new(TabularModels::learn(&d, env.domain().clone()));
                Box::new(PlanningAgent::new(m, cfg.filter, cfg.planner))
            }
            "bc" => Box::new(BcAgent::new(BcPolicy::learn(&demonstrations(&mut env, cfg, seed)))),
            "direct-llm" => {
                let c = res.completer.ok_or_else(|| HarnessError::NoCompleter(cfg.agent.clone()))?;
                let d = demonstrations(&mut env, cfg, seed);
                Box::new(DirectLlmAgent::new(c, env.domain().schema.clone(), agents::render_demos(&d)))
            }
            other => return Err(ConfigError::UnknownAgent(other.into()).into()),
        };
        for e in 0..cfg.episodes {
            let ep = run_episode(&mut env, agent.as_mut(), cfg.gamma, cfg.max_steps, episode_seed(seed, e));
            episodes.push(summary(seed, e, &ep));
        }
    }
    let (mean, stderr) = mean_stderr(&episodes.iter().map(|e| e.ret).collect::<Vec<_>>());
    Ok(RunReport {
        env: cfg.env.clone(),
        agent: cfg.agent.clone(),
        episodes,
        mean,
        stderr,
        nodes: None,
        log: Vec::new(),
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// The full loop: learn from demonstrations, then alternate acting and
/// relearning from the growing dataset.
pub fn run_pomdp_coder(cfg: &ExperimentConfig, proposer: &dyn Proposer) -> Result<RunReport, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut env = Env::new(&cfg.env)?;
    let domain = env.domain().clone();
    let n_actions = domain.schema.actions.len();
    let mut learn_cfg = cfg.learn.clone();
    learn_cfg.cache_dir = cfg.cache_dir.as_ref().map(|d| d.join(&cfg.env));
    let mut learner = Learner::new(domain.clone(), learn_cfg, proposer);
    let mut log = Vec::new();
    let mut episodes = Vec::new();
    let mut nodes = NodeCounts::default();

    for &seed in &cfg.seeds {
        let mut d = if cfg.online_only { Dataset::new(domain.schema.clone()) } else { demonstrations(&mut env, cfg, seed) };
        let mut models: Option<Arc<ModelSet>> = None;
        let mut learn = |d: &Dataset,
                         prev: Option<&Arc<ModelSet>>,
                         phase: Phase,
                         episode: Option<usize>,
                         log: &mut Vec<LogRecord>|
         -> Result<(Arc<ModelSet>, [usize; 4], [f64; 4]), HarnessError> {
            let s = mix2(seed, 300, episode.map_or(0, |e| e as u64 + 1));
            let result = learner.learn_models(d, prev.map(|m| &**m), s);
            for node in learner.take_log() {
                log.push(LogRecord::Node { phase, seed, episode, node });
            }
            let (m, sum) = result.map_err(|source| HarnessError::Learn { seed, episode, source })?;
            log.push(LogRecord::Learn {
                phase,
                seed,
                episode,
                dataset_records: d.records.len(),
                dataset_episodes: d.episode_ids().len(),
                created: sum.created,
                proposer_calls: sum.proposer_calls,
                coverage: sum.coverage,
            });
            let m = match prev {
                Some(p) if sum.kept.iter().all(|&k| k) => p.clone(),
                _ => Arc::new(m),
            };
            Ok((m, sum.created, sum.coverage))
        };

        let mut offline = [0; 4];
        let mut coverage = [f64::NAN; 4];
        if !d.records.is_empty() {
            let (m, created, cov) = learn(&d, None, Phase::Offline, None, &mut log)?;
            models = Some(m);
            offline = created;
            coverage = cov;
        }
        let mut online = [0; 4];
        for e in 0..cfg.episodes {
            let mut agent: Box<dyn Agent> = match &models {
                Some(m) => Box::new(PlanningAgent::new(m.clone(), cfg.filter, cfg.planner)),
                None => Box::new(RandomAgent::new(n_actions)),
            };
            let ep = run_episode(&mut env, agent.as_mut(), cfg.gamma, cfg.max_steps, episode_seed(seed, e));
            episodes.push(summary(seed, e, &ep));
            if cfg.offline_only {
                continue;
            }
            let id = d.next_episode_id();
            d.records.extend(ep.steps.into_iter().map(|r| TransitionRecord { episode_id: id, ..r }));
            if d.records.is_empty() {
                continue;
            }
            let (m, created, cov) = learn(&d, models.as_ref(), Phase::Online, Some(e), &mut log)?;
            models = Some(m);
            for i in 0..4 {
                online[i] += created[i];
            }
            coverage = cov;
        }
        nodes.offline.push(offline);
        nodes.online.push(online);
        nodes.final_coverage.push(coverage);
    }

    let (mean, stderr) = mean_stderr(&episodes.iter().map(|e| e.ret).collect::<Vec<_>>());
    Ok(RunReport {
        env: cfg.env.clone(),
        agent: cfg.agent.clone(),
        episodes,
        mean,
        stderr,
        nodes: Some(nodes),
        log,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Writes the learning log as JSON lines.
pub fn write_log(path: &std::path::Path, log: &[LogRecord]) -> std::io::Result<()> {
    use std::io::Write;
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in log {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    f.flush()
}

/// Default location of the program cache.
pub fn default_cache_dir() -> PathBuf {
    PathBuf::from("cache")
}
