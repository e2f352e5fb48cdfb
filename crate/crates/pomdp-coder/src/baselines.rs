//! Count-based comparison models: conditional probability tables and a
//! state-to-action lookup policy.

use std::collections::HashMap;
use std::sync::Arc;

use pomdp_core::{Dataset, Value};
use pps::{ComponentKind, SupportTable};
use rand::RngCore;

use crate::learner::component_pairs;
use crate::model::{Domain, ModelError, WorldModel};

fn encode_inputs(inputs: &[Value]) -> Vec<u8> {
    let mut key = Vec::new();
    for v in inputs {
        v.encode_into(&mut key);
    }
    key
}

/// Empirical conditional distribution for one component.
#[derive(Debug, Clone, Default)]
pub struct Table {
    rows: HashMap<Vec<u8>, Arc<SupportTable>>,
    /// Uniform over every outcome seen for this component.
    fallback: Arc<SupportTable>,
}

impl Table {
    fn learn(pairs: &[crate::learner::Pair]) -> Self {
        let mut counts: HashMap<Vec<u8>, Vec<(Value, f64)>> = HashMap::new();
        let mut seen: Vec<Value> = Vec::new();
        for p in pairs {
            counts.entry(encode_inputs(&p.inputs)).or_default().push((p.outcome.clone(), 1.0));
            if !seen.contains(&p.outcome) {
                seen.push(p.outcome.clone());
            }
        }
        Table {
            rows: counts.into_iter().map(|(k, v)| (k, Arc::new(SupportTable::from_weights(v)))).collect(),
            fallback: Arc::new(SupportTable::from_weights(seen.into_iter().map(|v| (v, 1.0)))),
        }
    }

    /// The row for `inputs`, or the uniform fallback when unseen.
    pub fn get(&self, inputs: &[Value]) -> &Arc<SupportTable> {
        self.rows.get(&encode_inputs(inputs)).unwrap_or(&self.fallback)
    }

    pub fn is_seen(&self, inputs: &[Value]) -> bool {
        self.rows.contains_key(&encode_inputs(inputs))
    }

    pub fn conditions(&self) -> usize {
        self.rows.len()
    }
}

/// Conditional probability tables for all four components.
#[derive(Debug, Clone)]
pub struct TabularModels {
    domain: Arc<Domain>,
    tables: [Table; 4],
}

impl TabularModels {
    pub fn learn(d: &Dataset, domain: Arc<Domain>) -> Self {
        let tables = ComponentKind::ALL.map(|k| Table::learn(&component_pairs(d, &domain, k)));
        TabularModels { domain, tables }
    }

    pub fn table(&self, kind: ComponentKind) -> &Table {
        &self.tables[ComponentKind::ALL.iter().position(|&k| k == kind).expect("kind")]
    }

    fn sample(&self, kind: ComponentKind, inputs: &[Value], rng: &mut dyn RngCore) -> Result<Value, ModelError> {
        self.table(kind).get(inputs).sample(rng).cloned().ok_or(ModelError::NoOutcome { kind })
    }
}

impl WorldModel for TabularModels {
    fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    fn sample_initial(&self, rng: &mut dyn RngCore) -> Result<Value, ModelError> {
        self.sample(ComponentKind::Initial, &[self.domain.empty_state.clone()], rng)
    }

    fn sample_transition(&self, s: &Value, a: i64, rng: &mut dyn RngCore) -> Result<Value, ModelError> {
        self.sample(ComponentKind::Transition, &[s.clone(), Value::Int(a)], rng)
    }

    fn sample_observation(&self, s2: &Value, a: i64, rng: &mut dyn RngCore) -> Result<Value, ModelError> {
        let inputs = self.domain.inputs(ComponentKind::Observation, None, a, Some(s2));
        self.sample(ComponentKind::Observation, &inputs, rng)
    }

    fn sample_reward(&self, s: &Value, a: i64, s2: &Value, rng: &mut dyn RngCore) -> Result<(f64, bool), ModelError> {
        let v = self.sample(ComponentKind::Reward, &[s.clone(), Value::Int(a), s2.clone()], rng)?;
        v.as_reward_outcome().ok_or(ModelError::NoOutcome { kind: ComponentKind::Reward })
    }

    fn observation_prob(&self, s2: &Value, a: i64, o: &Value) -> Option<f64> {
        let inputs = self.domain.inputs(ComponentKind::Observation, None, a, Some(s2));
        Some(self.table(ComponentKind::Observation).get(&inputs).prob(o))
    }

    fn transition_support(&self, s: &Value, a: i64) -> Option<Arc<SupportTable>> {
        Some(self.table(ComponentKind::Transition).get(&[s.clone(), Value::Int(a)]).clone())
    }
}

/// Majority-vote lookup from true state to action.
#[derive(Debug, Clone, PartialEq)]
pub struct BcPolicy {
    actions: HashMap<Vec<u8>, usize>,
    pub default_action: usize,
}

impl BcPolicy {
    /// Ties go to the lowest action index.
    pub fn learn(d: &Dataset) -> Self {
        let n = d.schema.actions.len();
        let mut votes: HashMap<Vec<u8>, Vec<usize>> = HashMap::new();
        for r in &d.records {
            votes.entry(r.state.encode()).or_insert_with(|| vec![0; n])[r.action] += 1;
        }
        let actions = votes
            .into_iter()
            .map(|(k, v)| {
                let best = (0..n).max_by(|&i, &j| v[i].cmp(&v[j]).then(j.cmp(&i))).unwrap_or(0);
                (k, best)
            })
            .collect();
        BcPolicy { actions, default_action: 0 }
    }

    pub fn act(&self, s: &Value) -> usize {
        self.actions.get(&s.encode()).copied().unwrap_or(self.default_action)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{tiger, Env};
    use pomdp_core::TransitionRecord;

    fn dataset(rows: &[(i64, usize, u32)]) -> Dataset {
        let env = Env::new("tiger").unwrap();
        let mut d = Dataset::new(env.domain().schema.clone());
        for (i, &(loc, a, o)) in rows.iter().enumerate() {
            d.records.push(TransitionRecord {
                episode_id: i as u64,
                step: 0,
                state: tiger::state(loc),
                action: a,
                observation: tiger::obs(o),
                reward: -1.0,
                next_state: tiger::state(loc),
                done: false,
            });
        }
        d
    }

    #[test]
    fn counts_become_exact_ratios() {
        let mut rows = vec![(0, tiger::LISTEN, tiger::HEAR_LEFT); 85];
        rows.extend(vec![(0, tiger::LISTEN, tiger::HEAR_RIGHT); 15]);
        let d = dataset(&rows);
        let m = TabularModels::learn(&d, Env::new("tiger").unwrap().domain().clone());
        let p = m.observation_prob(&tiger::state(0), tiger::LISTEN as i64, &tiger::obs(tiger::HEAR_LEFT)).unwrap();
        assert_eq!(p, 0.85);
        // unseen condition: uniform over the two observations seen anywhere
        let q = m.observation_prob(&tiger::state(1), tiger::OPEN_LEFT as i64, &tiger::obs(tiger::HEAR_RIGHT)).unwrap();
        assert_eq!(q, 0.5);
        assert_eq!(m.observation_prob(&tiger::state(1), 0, &tiger::obs(tiger::NONE)), Some(0.0));
    }

    #[test]
    fn bc_majority_ties_and_default() {
        let d = dataset(&[(0, 2, 0), (0, 2, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)]);
        let bc = BcPolicy::learn(&d);
        assert_eq!(bc.act(&tiger::state(0)), 2);
        assert_eq!(bc.act(&tiger::state(1)), 0);
        let empty = BcPolicy::learn(&dataset(&[]));
        assert_eq!(empty.act(&tiger::state(1)), 0);
    }
}
