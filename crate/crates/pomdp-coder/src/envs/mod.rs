//! Simulated environments, their ground-truth programs, and scripted
//! demonstrators.

pub mod minigrid;
pub mod rocksample;
pub mod tiger;

use std::sync::Arc;

use pomdp_core::seed::rng;
use pomdp_core::{Dataset, TransitionRecord, Value};
use pps::{Program, NULL_ACTION};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Domain, ModelSet};
use minigrid::Variant;

pub const ENV_IDS: [&str; 7] =
    ["tiger", "rocksample-4-4", "minigrid-empty", "minigrid-corners", "minigrid-lava", "minigrid-rooms", "minigrid-unlock"];

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EnvError {
    #[error("unknown environment '{0}'")]
    Unknown(String),
    #[error("step called after the episode ended")]
    StepAfterDone,
    #[error("step called before reset")]
    NotReset,
    #[error("action {0} out of range")]
    BadAction(usize),
}

/// Hyperparameter family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Classical,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Tiger,
    RockSample,
    MiniGrid(Variant),
}

impl Kind {
    pub fn parse(id: &str) -> Result<Self, EnvError> {
        Ok(match id {
            "tiger" => Kind::Tiger,
            "rocksample-4-4" => Kind::RockSample,
            "minigrid-empty" => Kind::MiniGrid(Variant::Empty),
            "minigrid-corners" => Kind::MiniGrid(Variant::Corners),
            "minigrid-lava" => Kind::MiniGrid(Variant::Lava),
            "minigrid-rooms" => Kind::MiniGrid(Variant::Rooms),
            "minigrid-unlock" => Kind::MiniGrid(Variant::Unlock),
            other => return Err(EnvError::Unknown(other.into())),
        })
    }

    pub fn id(self) -> &'static str {
        match self {
            Kind::Tiger => "tiger",
            Kind::RockSample => "rocksample-4-4",
            Kind::MiniGrid(Variant::Empty) => "minigrid-empty",
            Kind::MiniGrid(Variant::Corners) => "minigrid-corners",
            Kind::MiniGrid(Variant::Lava) => "minigrid-lava",
            Kind::MiniGrid(Variant::Rooms) => "minigrid-rooms",
            Kind::MiniGrid(Variant::Unlock) => "minigrid-unlock",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Kind::MiniGrid(_) => Family::Grid,
            _ => Family::Classical,
        }
    }

    pub fn max_steps(self) -> usize {
        match self {
            Kind::Tiger => 20,
            Kind::RockSample => 50,
            Kind::MiniGrid(_) => 100,
        }
    }

    pub fn domain(self) -> Domain {
        let (schema, empty_state, empty_obs) = match self {
            Kind::Tiger => (tiger::schema(), tiger::state(0), tiger::obs(tiger::NONE)),
            Kind::RockSample => (
                rocksample::schema(),
                rocksample::Rs { x: 0, y: 0, good: [false; 4] }.to_value(),
                rocksample::obs(rocksample::OBS_NONE),
            ),
            Kind::MiniGrid(v) => (minigrid::schema(v), minigrid::empty_state(v), minigrid::empty_obs()),
        };
        Domain { schema: Arc::new(schema), empty_state, empty_obs }
    }

    /// Ground-truth program sources in component order.
    pub fn sources(self) -> [&'static str; 4] {
        match self {
            Kind::Tiger => [
                include_str!("programs/tiger_initial.pps"),
                include_str!("programs/tiger_transition.pps"),
                include_str!("programs/tiger_observation.pps"),
                include_str!("programs/tiger_reward.pps"),
            ],
            Kind::RockSample => [
                include_str!("programs/rocksample_initial.pps"),
                include_str!("programs/rocksample_transition.pps"),
                include_str!("programs/rocksample_observation.pps"),
                include_str!("programs/rocksample_reward.pps"),
            ],
            Kind::MiniGrid(v) => [
                match v {
                    Variant::Empty => include_str!("programs/minigrid_empty_initial.pps"),
                    Variant::Corners => include_str!("programs/minigrid_corners_initial.pps"),
                    Variant::Lava => include_str!("programs/minigrid_lava_initial.pps"),
                    Variant::Rooms => include_str!("programs/minigrid_rooms_initial.pps"),
                    Variant::Unlock => include_str!("programs/minigrid_unlock_initial.pps"),
                },
                include_str!("programs/minigrid_transition.pps"),
                include_str!("programs/minigrid_observation.pps"),
                include_str!("programs/minigrid_reward.pps"),
            ],
        }
    }

    pub fn ground_truth(self, domain: &Arc<Domain>) -> ModelSet {
        let programs = self.sources().map(|src| {
            Program::from_file_contents(src, domain.schema.clone()).unwrap_or_else(|e| panic!("{}: {e}", self.id()))
        });
        ModelSet::new(domain.clone(), programs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub next_state: Value,
    pub observation: Value,
    pub reward: f64,
    pub done: bool,
}

/// A simulator instance. Single-threaded; create one per worker.
pub struct Env {
    kind: Kind,
    domain: Arc<Domain>,
    truth: Arc<ModelSet>,
    rng: ChaCha8Rng,
    state: Option<Value>,
    done: bool,
    t: usize,
}

impl Env {
    pub fn new(id: &str) -> Result<Self, EnvError> {
        let kind = Kind::parse(id)?;
        let domain = Arc::new(kind.domain());
        let truth = Arc::new(kind.ground_truth(&domain));
        Ok(Env { kind, domain, truth, rng: rng(0), state: None, done: false, t: 0 })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn id(&self) -> &'static str {
        self.kind.id()
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn ground_truth(&self) -> &Arc<ModelSet> {
        &self.truth
    }

    /// Post-hoc true state.
    pub fn state(&self) -> Option<&Value> {
        self.state.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Steps taken since the last reset.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn reset(&mut self, seed: u64) -> (Value, Value) {
        self.rng = rng(seed);
        let s = match self.kind {
            Kind::Tiger => tiger::initial(&mut self.rng),
            Kind::RockSample => rocksample::initial(&mut self.rng),
            Kind::MiniGrid(v) => minigrid::initial(v, &mut self.rng),
        };
        let o = self.observe(&s, NULL_ACTION);
        self.state = Some(s.clone());
        self.done = false;
        self.t = 0;
        (s, o)
    }

    fn observe(&mut self, s2: &Value, a: i64) -> Value {
        match self.kind {
            Kind::Tiger => tiger::observe(s2, a, &mut self.rng),
            Kind::RockSample => rocksample::observe(s2, a, &mut self.rng),
            Kind::MiniGrid(_) => minigrid::observe(s2),
        }
    }

    pub fn step(&mut self, a: usize) -> Result<Step, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        if a >= self.domain.schema.actions.len() {
            return Err(EnvError::BadAction(a));
        }
        let s = self.state.as_ref().ok_or(EnvError::NotReset)?;
        let (s2, reward, done) = match self.kind {
            Kind::Tiger => tiger::step(s, a),
            Kind::RockSample => rocksample::step(s, a),
            Kind::MiniGrid(_) => minigrid::step(s, a),
        };
        let observation = self.observe(&s2, a as i64);
        self.state = Some(s2.clone());
        self.done = done;
        self.t += 1;
        Ok(Step { next_state: s2, observation, reward, done })
    }

    /// Scripted demonstrator acting on the true state.
    pub fn demo_action(&self) -> usize {
        let s = self.state.as_ref().expect("reset before asking for a demo action");
        match self.kind {
            Kind::Tiger => tiger::demo(s, self.t),
            Kind::RockSample => rocksample::demo(s, self.t),
            Kind::MiniGrid(_) => minigrid::demo(s),
        }
    }
}

/// Runs `episodes` demonstrator episodes and records full transitions.
pub fn collect_demos(env: &mut Env, episodes: usize, seed: u64) -> Dataset {
    let mut d = Dataset::new(env.domain().schema.clone());
    collect_into(env, &mut d, episodes, usize::MAX, seed);
    d
}

/// Appends demonstrator episodes until `episodes` are recorded or the
/// dataset reaches `max_records`.
pub fn collect_into(env: &mut Env, d: &mut Dataset, episodes: usize, max_records: usize, seed: u64) {
    let max_steps = env.kind().max_steps();
    for e in 0..episodes {
        if d.records.len() >= max_records {
            break;
        }
        let id = d.next_episode_id();
        env.reset(pomdp_core::seed::mix(seed, e as u64));
        while !env.is_done() && env.t() < max_steps && d.records.len() < max_records {
            let s = env.state().expect("reset").clone();
            let a = env.demo_action();
            let st = env.step(a).expect("demo action is valid");
            d.records.push(TransitionRecord {
                episode_id: id,
                step: (env.t() - 1) as u64,
                state: s,
                action: a,
                observation: st.observation,
                reward: st.reward,
                next_state: st.next_state,
                done: st.done,
            });
        }
    }
}
