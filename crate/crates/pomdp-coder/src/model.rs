//! World-model interface shared by the filter and planner, and the
//! program-backed [`ModelSet`].

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use parking_lot::Mutex;
use pomdp_core::{DomainSchema, Value};
use pps::{ComponentKind, Program, RunError, SupportTable, DEFAULT_MAX_SITES};
use rand::{Rng, RngCore};
use serde::Serialize;
use thiserror::Error;

/// A schema plus the scaffold values handed to the initial and observation
/// templates (`empty_state`, `empty_obs`).
#[derive(Debug, Clone)]
pub struct Domain {
    pub schema: Arc<DomainSchema>,
    pub empty_state: Value,
    pub empty_obs: Value,
}

impl Domain {
    /// Input vector for one component call.
    pub fn inputs(&self, kind: ComponentKind, s: Option<&Value>, a: i64, s2: Option<&Value>) -> Vec<Value> {
        match kind {
            ComponentKind::Initial => vec![self.empty_state.clone()],
            ComponentKind::Transition => vec![s.expect("state").clone(), Value::Int(a)],
            ComponentKind::Observation => vec![s2.expect("next state").clone(), Value::Int(a), self.empty_obs.clone()],
            ComponentKind::Reward => vec![s.expect("state").clone(), Value::Int(a), s2.expect("next state").clone()],
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("{kind} model: {err}")]
    Run { kind: ComponentKind, err: RunError },
    #[error("{kind} model has no outcome for this input")]
    NoOutcome { kind: ComponentKind },
}

/// Generative access to the four POMDP components.
pub trait WorldModel: Send + Sync {
    fn domain(&self) -> &Arc<Domain>;
    fn sample_initial(&self, rng: &mut dyn RngCore) -> Result<Value, ModelError>;
    fn sample_transition(&self, s: &Value, a: i64, rng: &mut dyn RngCore) -> Result<Value, ModelError>;
    fn sample_observation(&self, s2: &Value, a: i64, rng: &mut dyn RngCore) -> Result<Value, ModelError>;
    fn sample_reward(&self, s: &Value, a: i64, s2: &Value, rng: &mut dyn RngCore) -> Result<(f64, bool), ModelError>;
    /// Exact `P(o | s', a)`, or `None` when only sampling is possible.
    fn observation_prob(&self, s2: &Value, a: i64, o: &Value) -> Option<f64>;
    /// Exact next-state distribution, or `None` when only sampling is possible.
    fn transition_support(&self, s: &Value, a: i64) -> Option<Arc<SupportTable>>;
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Provenance {
    pub node_id: usize,
    pub coverage: f64,
}

enum Entry {
    Table(Arc<SupportTable>),
    Opaque,
}

const MEMO_LIMIT: usize = 200_000;

/// Per-component cache of exact output tables keyed by encoded inputs.
struct Memo {
    map: Mutex<HashMap<Vec<u8>, Arc<Entry>>>,
}

impl Memo {
    fn new() -> Self {
        Memo { map: Mutex::new(HashMap::new()) }
    }

    fn get(&self, p: &Program, inputs: &[Value]) -> Arc<Entry> {
        let mut key = Vec::with_capacity(128);
        for v in inputs {
            v.encode_into(&mut key);
        }
        if let Some(e) = self.map.lock().get(&key) {
            return e.clone();
        }
        let e = Arc::new(match p.enumerate_support(inputs, DEFAULT_MAX_SITES) {
            Ok(t) => Entry::Table(Arc::new(t)),
            Err(_) => Entry::Opaque,
        });
        let mut map = self.map.lock();
        if map.len() >= MEMO_LIMIT {
            map.clear();
        }
        map.insert(key, e.clone());
        e
    }
}

/// Draws from an exact table, reproducing the mass of erroring branches.
fn sample_table(t: &SupportTable, kind: ComponentKind, rng: &mut dyn RngCore) -> Result<Value, ModelError> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (v, p) in t.entries() {
        acc += p;
        if u < acc {
            return Ok(v.clone());
        }
    }
    match t.errors().first() {
        Some((e, _)) => Err(ModelError::Run { kind, err: e.clone() }),
        None => t.entries().last().map(|(v, _)| v.clone()).ok_or(ModelError::NoOutcome { kind }),
    }
}

/// The four learned (or ground-truth) programs.
pub struct ModelSet {
    domain: Arc<Domain>,
    programs: [Program; 4],
    pub provenance: [Provenance; 4],
    memo: [Memo; 4],
}

impl fmt::Debug for ModelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSet").field("domain", &self.domain.schema.name).field("programs", &self.programs).finish()
    }
}

impl Clone for ModelSet {
    fn clone(&self) -> Self {
        ModelSet::with_provenance(self.domain.clone(), self.programs.clone(), self.provenance.clone())
    }
}

fn slot(kind: ComponentKind) -> usize {
    match kind {
        ComponentKind::Initial => 0,
        ComponentKind::Transition => 1,
        ComponentKind::Observation => 2,
        ComponentKind::Reward => 3,
    }
}

impl ModelSet {
    /// Programs in `ComponentKind::ALL` order: initial, transition, observation, reward.
    pub fn new(domain: Arc<Domain>, programs: [Program; 4]) -> Self {
        Self::with_provenance(domain, programs, Default::default())
    }

    pub fn with_provenance(domain: Arc<Domain>, programs: [Program; 4], provenance: [Provenance; 4]) -> Self {
        for (p, k) in programs.iter().zip(ComponentKind::ALL) {
            assert_eq!(p.kind(), k, "program slot mismatch");
        }
        ModelSet { domain, programs, provenance, memo: [Memo::new(), Memo::new(), Memo::new(), Memo::new()] }
    }

    pub fn program(&self, kind: ComponentKind) -> &Program {
        &self.programs[slot(kind)]
    }

    pub fn programs(&self) -> &[Program; 4] {
        &self.programs
    }

    /// Exact table for one component call when enumeration succeeds.
    pub fn support(&self, kind: ComponentKind, inputs: &[Value]) -> Option<Arc<SupportTable>> {
        match &*self.memo[slot(kind)].get(self.program(kind), inputs) {
            Entry::Table(t) => Some(t.clone()),
            Entry::Opaque => None,
        }
    }

    fn sample(&self, kind: ComponentKind, inputs: Vec<Value>, rng: &mut dyn RngCore) -> Result<Value, ModelError> {
        let i = slot(kind);
        match &*self.memo[i].get(&self.programs[i], &inputs) {
            Entry::Table(t) => sample_table(t, kind, rng),
            Entry::Opaque => self.programs[i].run_with(&inputs, rng).map_err(|err| ModelError::Run { kind, err }),
        }
    }
}

impl WorldModel for ModelSet {
    fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    fn sample_initial(&self, rng: &mut dyn RngCore) -> Result<Value, ModelError> {
        let inputs = self.domain.inputs(ComponentKind::Initial, None, 0, None);
        self.sample(ComponentKind::Initial, inputs, rng)
    }

    fn sample_transition(&self, s: &Value, a: i64, rng: &mut dyn RngCore) -> Result<Value, ModelError> {
        self.sample(ComponentKind::Transition, vec![s.clone(), Value::Int(a)], rng)
    }

    fn sample_observation(&self, s2: &Value, a: i64, rng: &mut dyn RngCore) -> Result<Value, ModelError> {
        let inputs = self.domain.inputs(ComponentKind::Observation, None, a, Some(s2));
        self.sample(ComponentKind::Observation, inputs, rng)
    }

    fn sample_reward(&self, s: &Value, a: i64, s2: &Value, rng: &mut dyn RngCore) -> Result<(f64, bool), ModelError> {
        let v = self.sample(ComponentKind::Reward, vec![s.clone(), Value::Int(a), s2.clone()], rng)?;
        v.as_reward_outcome().ok_or(ModelError::NoOutcome { kind: ComponentKind::Reward })
    }

    fn observation_prob(&self, s2: &Value, a: i64, o: &Value) -> Option<f64> {
        let inputs = self.domain.inputs(ComponentKind::Observation, None, a, Some(s2));
        self.support(ComponentKind::Observation, &inputs).map(|t| t.prob(o))
    }

    fn transition_support(&self, s: &Value, a: i64) -> Option<Arc<SupportTable>> {
        self.support(ComponentKind::Transition, &[s.clone(), Value::Int(a)])
    }
}

/// Monte Carlo membership: does `o` appear among `k` observation draws?
pub fn observation_seen(m: &dyn WorldModel, s2: &Value, a: i64, o: &Value, k: usize, rng: &mut dyn RngCore) -> bool {
    (0..k).any(|_| m.sample_observation(s2, a, rng).is_ok_and(|x| &x == o))
}
