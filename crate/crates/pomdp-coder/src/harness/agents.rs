//! Agents that can be driven through an episode.

use std::sync::Arc;

use pomdp_core::seed::{mix, mix2, rng};
use pomdp_core::schema::SchemaType;
use pomdp_core::{Dataset, DomainSchema, Value};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::baselines::BcPolicy;
use crate::belief::{BeliefError, Filter, FilterConfig};
use crate::model::WorldModel;
use crate::planner::{plan, PlannerConfig};
use crate::proposer::{build_direct_prompt, extract_action, Completer};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AgentError {
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error("agent used before begin()")]
    NotStarted,
}

pub trait Agent {
    /// Starts an episode from the reset observation.
    fn begin(&mut self, o0: &Value, seed: u64) -> Result<(), AgentError>;
    /// Chooses the next action. `true_state` is read only by agents granted
    /// privileged access (behaviour cloning).
    fn act(&mut self, true_state: &Value) -> Result<usize, AgentError>;
    fn observe(&mut self, a: usize, o: &Value, reward: f64) -> Result<(), AgentError>;
}

pub struct RandomAgent {
    n_actions: usize,
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(n_actions: usize) -> Self {
        RandomAgent { n_actions, rng: rng(0) }
    }
}

impl Agent for RandomAgent {
    fn begin(&mut self, _o0: &Value, seed: u64) -> Result<(), AgentError> {
        self.rng = rng(seed);
        Ok(())
    }

    fn act(&mut self, _: &Value) -> Result<usize, AgentError> {
        Ok(self.rng.random_range(0..self.n_actions))
    }

    fn observe(&mut self, _: usize, _: &Value, _: f64) -> Result<(), AgentError> {
        Ok(())
    }
}

/// Particle filter plus belief-space planner over a world model.
pub struct PlanningAgent {
    model: Arc<dyn WorldModel>,
    filter_cfg: FilterConfig,
    planner_cfg: PlannerConfig,
    filter: Option<Filter>,
    seed: u64,
    step: u64,
    /// Steps where planning failed and a random action was taken.
    pub fallbacks: usize,
    pub expansions: usize,
}

impl PlanningAgent {
    pub fn new(model: Arc<dyn WorldModel>, filter_cfg: FilterConfig, planner_cfg: PlannerConfig) -> Self {
        PlanningAgent { model, filter_cfg, planner_cfg, filter: None, seed: 0, step: 0, fallbacks: 0, expansions: 0 }
    }

    pub fn filter(&self) -> Option<&Filter> {
        self.filter.as_ref()
    }
}

impl Agent for PlanningAgent {
    fn begin(&mut self, o0: &Value, seed: u64) -> Result<(), AgentError> {
        self.seed = seed;
        self.step = 0;
        self.filter = Some(Filter::new(self.model.clone(), self.filter_cfg, o0, mix(seed, 0))?);
        Ok(())
    }

    fn act(&mut self, _: &Value) -> Result<usize, AgentError> {
        let f = self.filter.as_ref().ok_or(AgentError::NotStarted)?;
        let s = mix2(self.seed, 1, self.step);
        match plan(f.belief(), &*self.model, &self.planner_cfg, s) {
            Ok(p) => {
                self.expansions += p.expansions;
                Ok(p.action)
            }
            Err(_) => {
                self.fallbacks += 1;
                Ok(rng(mix(s, 1)).random_range(0..self.model.domain().schema.actions.len()))
            }
        }
    }

    fn observe(&mut self, a: usize, o: &Value, _: f64) -> Result<(), AgentError> {
        self.step += 1;
        self.filter.as_mut().ok_or(AgentError::NotStarted)?.update(a as i64, o)?;
        Ok(())
    }
}

/// Behaviour cloning on the simulator's true state.
pub struct BcAgent {
    policy: BcPolicy,
}

impl BcAgent {
    pub fn new(policy: BcPolicy) -> Self {
        BcAgent { policy }
    }
}

impl Agent for BcAgent {
    fn begin(&mut self, _: &Value, _: u64) -> Result<(), AgentError> {
        Ok(())
    }

    fn act(&mut self, true_state: &Value) -> Result<usize, AgentError> {
        Ok(self.policy.act(true_state))
    }

    fn observe(&mut self, _: usize, _: &Value, _: f64) -> Result<(), AgentError> {
        Ok(())
    }
}

fn render_obs(schema: &DomainSchema, o: &Value) -> String {
    schema.render(o, SchemaType::Record(&schema.observation))
}

/// Demonstration episodes rendered for the direct-action prompt.
pub fn render_demos(d: &Dataset) -> Vec<String> {
    let s = &d.schema;
    d.episodes()
        .values()
        .enumerate()
        .map(|(i, recs)| {
            let mut lines = vec![format!("Episode {i}:")];
            for r in recs {
                lines.push(format!(
                    "state={}, action={} ({}), observation={}, reward={:?}, done={}",
                    s.render(&r.state, SchemaType::Record(&s.state)),
                    s.action_name(r.action),
                    r.action,
                    render_obs(s, &r.observation),
                    r.reward,
                    if r.done { "True" } else { "False" }
                ));
            }
            lines.join("\n")
        })
        .collect()
}

/// Asks a language model for each action directly.
pub struct DirectLlmAgent<'a> {
    completer: &'a dyn Completer,
    schema: Arc<DomainSchema>,
    demos: Vec<String>,
    history: Vec<String>,
    pub attempts: usize,
    pub fallbacks: usize,
}

impl<'a> DirectLlmAgent<'a> {
    pub fn new(completer: &'a dyn Completer, schema: Arc<DomainSchema>, demos: Vec<String>) -> Self {
        DirectLlmAgent { completer, schema, demos, history: Vec::new(), attempts: 3, fallbacks: 0 }
    }

    pub fn history(&self) -> &[String] {
        &self.history
    }
}

impl Agent for DirectLlmAgent<'_> {
    fn begin(&mut self, o0: &Value, _: u64) -> Result<(), AgentError> {
        self.history = vec![format!("initial observation={}", render_obs(&self.schema, o0))];
        Ok(())
    }

    fn act(&mut self, _: &Value) -> Result<usize, AgentError> {
        let prompt = build_direct_prompt(&self.schema, &self.demos, &self.history);
        for _ in 0..self.attempts {
            let Ok(text) = self.completer.complete(&prompt) else { continue };
            if let Some(a) = extract_action(&text).filter(|&a| a < self.schema.actions.len()) {
                return Ok(a);
            }
        }
        self.fallbacks += 1;
        Ok(0)
    }

    fn observe(&mut self, a: usize, o: &Value, reward: f64) -> Result<(), AgentError> {
        let line = format!(
            "action={} ({}), observation={}, reward={reward:?}",
            self.schema.action_name(a),
            a,
            render_obs(&self.schema, o)
        );
        self.history.push(line);
        Ok(())
    }
}
