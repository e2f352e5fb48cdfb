//! Experiment configuration and its flat `key = value` file format.

use std::path::PathBuf;

use thiserror::Error;

use crate::belief::FilterConfig;
use crate::envs::{EnvError, Family, Kind};
use crate::learner::LearnConfig;
use crate::planner::PlannerConfig;

pub const AGENT_IDS: [&str; 6] = ["random", "oracle", "tabular", "bc", "direct-llm", "pomdp-coder"];

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value'")]
    Syntax { line: usize },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("bad value for '{key}': {value}")]
    BadValue { key: String, value: String },
    #[error("unknown agent '{0}'")]
    UnknownAgent(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Where program proposals come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProposerChoice {
    /// The environment's own ground-truth programs.
    GroundTruth,
    /// Queues read from a directory of `.pps` files.
    Scripted(PathBuf),
    /// A chat-completion endpoint configured through environment variables.
    Http,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: String,
    pub agent: String,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub demo_episodes: usize,
    /// When set, demonstrations are collected until this many transitions.
    pub dataset_steps: Option<usize>,
    pub gamma: f64,
    pub max_steps: usize,
    pub planner: PlannerConfig,
    pub filter: FilterConfig,
    pub learn: LearnConfig,
    pub offline_only: bool,
    pub online_only: bool,
    pub proposer: ProposerChoice,
    pub cache_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for the environment's hyperparameter family.
    pub fn for_env(env: &str, agent: &str) -> Result<Self, ConfigError> {
        let kind = Kind::parse(env)?;
        if !AGENT_IDS.contains(&agent) {
            return Err(ConfigError::UnknownAgent(agent.into()));
        }
        let (planner, filter) = match kind.family() {
            Family::Classical => {
                (PlannerConfig::classical(), FilterConfig { n_particles: 50, max_rejuvenation: 250_000, rollouts: 5 })
            }
            Family::Grid => (PlannerConfig::grid(), FilterConfig { n_particles: 10, max_rejuvenation: 500_000, rollouts: 1 }),
        };
        Ok(ExperimentConfig {
            env: env.into(),
            agent: agent.into(),
            seeds: (0..5).collect(),
            episodes: 10,
            demo_episodes: 10,
            dataset_steps: None,
            gamma: 0.98,
            max_steps: kind.max_steps(),
            planner,
            filter,
            learn: LearnConfig::default(),
            offline_only: false,
            online_only: false,
            proposer: ProposerChoice::GroundTruth,
            cache_dir: None,
        })
    }

    pub fn kind(&self) -> Kind {
        Kind::parse(&self.env).expect("validated environment id")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        Kind::parse(&self.env)?;
        if !AGENT_IDS.contains(&self.agent.as_str()) {
            return Err(ConfigError::UnknownAgent(self.agent.clone()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(ConfigError::Invalid(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        if self.episodes == 0 || self.seeds.is_empty() {
            return Err(ConfigError::Invalid("need at least one seed and one episode".into()));
        }
        if self.offline_only && self.online_only {
            return Err(ConfigError::Invalid("offline_only and online_only are exclusive".into()));
        }
        Ok(())
    }

    /// Applies one `key = value` setting. Switching `env` resets the
    /// family-dependent defaults, so set it first.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue { key: key.into(), value: value.into() };
        fn num<T: std::str::FromStr>(v: &str, bad: impl Fn() -> ConfigError) -> Result<T, ConfigError> {
            v.parse().map_err(|_| bad())
        }
        let flag = |v: &str| match v {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(bad()),
        };
        match key {
            "env" => {
                let fresh = ExperimentConfig::for_env(value, &self.agent)?;
                *self = ExperimentConfig { seeds: self.seeds.clone(), episodes: self.episodes, ..fresh };
            }
            "agent" => {
                if !AGENT_IDS.contains(&value) {
                    return Err(ConfigError::UnknownAgent(value.into()));
                }
                self.agent = value.into();
            }
            "seeds" => self.seeds = parse_seeds(value).ok_or_else(bad)?,
            "episodes" => self.episodes = num(value, bad)?,
            "demo_episodes" => self.demo_episodes = num(value, bad)?,
            "dataset_steps" => self.dataset_steps = Some(num(value, bad)?),
            "gamma" => self.gamma = num(value, bad)?,
            "max_steps" => self.max_steps = num(value, bad)?,
            "horizon" => self.planner.horizon = num(value, bad)?,
            "lambda" => self.planner.lambda = num(value, bad)?,
            "alpha" => self.planner.alpha = num(value, bad)?,
            "action_cost" => self.planner.action_cost = num(value, bad)?,
            "rollouts" => {
                self.planner.rollouts_per_query = num(value, bad)?;
                self.filter.rollouts = self.planner.rollouts_per_query;
            }
            "particles" => self.filter.n_particles = num(value, bad)?,
            "max_rejuvenation" => self.filter.max_rejuvenation = num(value, bad)?,
            "max_refinements" => self.learn.max_refinements = num(value, bad)?,
            "smoothing" => self.learn.smoothing = num(value, bad)?,
            "k_cov" => self.learn.k_cov = num(value, bad)?,
            "nd" => self.learn.n_examples = num(value, bad)?,
            "nc" => self.learn.n_conditions = num(value, bad)?,
            "ns" => self.learn.n_samples = num(value, bad)?,
            "test_fraction" => self.learn.test_fraction = num(value, bad)?,
            "offline_only" => self.offline_only = flag(value)?,
            "online_only" => self.online_only = flag(value)?,
            "proposer" => {
                self.proposer = match value {
                    "ground-truth" => ProposerChoice::GroundTruth,
                    "http" => ProposerChoice::Http,
                    other => match other.strip_prefix("scripted:") {
                        Some(dir) => ProposerChoice::Scripted(dir.into()),
                        None => return Err(bad()),
                    },
                }
            }
            "cache_dir" => self.cache_dir = Some(value.into()),
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        self.planner.gamma = self.gamma;
        Ok(())
    }

    /// Applies every setting of a config file in order.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (key, value) in parse_pairs(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }
}

/// `1,2,5` or `0..5` (exclusive end).
pub fn parse_seeds(v: &str) -> Option<Vec<u64>> {
    if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return (a < b).then(|| (a..b).collect());
    }
    v.split(',').map(|s| s.trim().parse().ok()).collect()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}
