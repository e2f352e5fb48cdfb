//! Determinized best-first search over particle beliefs.
//!
//! Each expansion samples every action from every particle, splits the
//! sampled next states by observation into child beliefs, and charges
//! `g' = g - r - lambda * ln p + alpha * h + cost`. The returned action is
//! the first step towards the cheapest node discovered.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use pomdp_core::seed::{mix2, rng};
use pomdp_core::Value;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{resample, Belief};
use crate::model::WorldModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Maximum number of expansions.
    pub horizon: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub action_cost: f64,
    pub rollouts_per_query: usize,
    pub gamma: f64,
}

impl PlannerConfig {
    pub fn classical() -> Self {
        PlannerConfig { horizon: 50, lambda: 0.1, alpha: 0.0, action_cost: 0.01, rollouts_per_query: 5, gamma: 0.98 }
    }

    pub fn grid() -> Self {
        PlannerConfig { horizon: 5000, lambda: 0.1, alpha: 0.0, action_cost: 0.01, rollouts_per_query: 1, gamma: 0.98 }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PlanError {
    #[error("the belief is already terminal")]
    NoActionNeeded,
    #[error("planning failed: {0}")]
    PlanFailure(String),
}

/// One sampled step `(s, s', o, r, done)`.
#[derive(Debug, Clone)]
pub struct Sample {
    pub s: Value,
    pub s2: Value,
    pub o: Value,
    pub r: f64,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct Child {
    pub belief: Belief,
    pub obs: Value,
    pub p_hat: f64,
    pub r_hat: f64,
    pub terminal: bool,
}

/// Splits samples by observation into child beliefs of `n` particles each.
/// Children come out in observation-encoding order.
pub fn branch(b: &Belief, samples: &[Sample], n: usize, rng: &mut dyn RngCore) -> Vec<Child> {
    let mut groups: BTreeMap<Vec<u8>, Vec<&Sample>> = BTreeMap::new();
    for smp in samples {
        groups.entry(smp.o.encode()).or_default().push(smp);
    }
    let total = samples.len() as f64;
    groups
        .into_values()
        .map(|g| {
            let next: Vec<Value> = g.iter().map(|x| x.s2.clone()).collect();
            let mut belief = Belief::new(resample(&next, &vec![1.0; next.len()], n, rng)).expect("nonempty group");
            belief.depth = b.depth + 1;
            let c = g.len() as f64;
            let terminal = g.iter().filter(|x| x.done).count() as f64 > 0.5 * c;
            belief.terminal = terminal;
            Child {
                belief,
                obs: g[0].o.clone(),
                p_hat: c / total,
                r_hat: g.iter().map(|x| x.r).sum::<f64>() / c,
                terminal,
            }
        })
        .collect()
}

/// Samples `rollouts` steps per particle; failed model runs are dropped.
pub fn sample_edge(b: &Belief, a: i64, m: &dyn WorldModel, rollouts: usize, rng: &mut dyn RngCore) -> (Vec<Sample>, usize) {
    let mut out = Vec::with_capacity(b.len() * rollouts);
    let mut failed = 0;
    for s in b.particles() {
        for _ in 0..rollouts {
            let step = m.sample_transition(s, a, rng).and_then(|s2| {
                let o = m.sample_observation(&s2, a, rng)?;
                let (r, done) = m.sample_reward(s, a, &s2, rng)?;
                Ok(Sample { s: s.clone(), s2, o, r, done })
            });
            match step {
                Ok(x) => out.push(x),
                Err(_) => failed += 1,
            }
        }
    }
    (out, failed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub action: usize,
    pub expansions: usize,
    pub nodes: usize,
    pub best_g: f64,
    /// Actions along the path to the cheapest node.
    pub path: Vec<usize>,
}

struct Node {
    belief: Belief,
    g: f64,
    parent: Option<usize>,
    action: Option<usize>,
}

#[derive(PartialEq)]
struct OpenEntry {
    g: f64,
    node: usize,
}

impl Eq for OpenEntry {}

impl Ord for OpenEntry {
    // reversed so BinaryHeap pops the lowest g, then the earliest node
    fn cmp(&self, other: &Self) -> Ordering {
        other.g.total_cmp(&self.g).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

type NodeKey = ([u8; 32], bool);

fn node_key(b: &Belief) -> NodeKey {
    (*b.key(), b.terminal)
}

pub fn plan(b0: &Belief, m: &dyn WorldModel, cfg: &PlannerConfig, seed: u64) -> Result<Plan, PlanError> {
    if b0.terminal {
        return Err(PlanError::NoActionNeeded);
    }
    let n_actions = m.domain().schema.actions.len();
    let mut nodes = vec![Node { belief: b0.clone(), g: 0.0, parent: None, action: None }];
    let mut open = BinaryHeap::from([OpenEntry { g: 0.0, node: 0 }]);
    let mut cost: HashMap<NodeKey, f64> = HashMap::from([(node_key(b0), 0.0)]);
    let mut closed: HashSet<NodeKey> = HashSet::new();
    let mut expansions = 0;
    let mut failures = 0usize;
    let mut attempts = 0usize;

    while expansions < cfg.horizon {
        let Some(OpenEntry { g, node }) = open.pop() else { break };
        let b = nodes[node].belief.clone();
        if b.terminal || !closed.insert(node_key(&b)) {
            continue;
        }
        for a in 0..n_actions {
            let mut r = rng(mix2(seed, expansions as u64, a as u64));
            let (samples, failed) = sample_edge(&b, a as i64, m, cfg.rollouts_per_query, &mut r);
            attempts += samples.len() + failed;
            failures += failed;
            if samples.is_empty() {
                continue;
            }
            for child in branch(&b, &samples, b.len(), &mut r) {
                let h = if cfg.alpha != 0.0 { child.belief.entropy() } else { 0.0 };
                let g2 = g - child.r_hat - cfg.lambda * child.p_hat.ln() + cfg.alpha * h + cfg.action_cost;
                let k = node_key(&child.belief);
                if cost.get(&k).is_none_or(|&old| g2 < old) {
                    cost.insert(k, g2);
                    nodes.push(Node { belief: child.belief, g: g2, parent: Some(node), action: Some(a) });
                    open.push(OpenEntry { g: g2, node: nodes.len() - 1 });
                }
            }
        }
        expansions += 1;
    }

    let best = (1..nodes.len()).min_by(|&i, &j| nodes[i].g.total_cmp(&nodes[j].g).then(i.cmp(&j)));
    let Some(best) = best else {
        return Err(PlanError::PlanFailure(format!("no child belief formed; {failures} of {attempts} model runs failed")));
    };
    let mut path = Vec::new();
    let mut at = best;
    while let (Some(p), Some(a)) = (nodes[at].parent, nodes[at].action) {
        path.push(a);
        at = p;
    }
    path.reverse();
    Ok(Plan { action: path[0], expansions, nodes: nodes.len(), best_g: nodes[best].g, path })
}
