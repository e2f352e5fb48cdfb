//! Coverage scoring and the Thompson-sampled propose/refine tree that learns
//! each component program from post-hoc fully observed transitions.

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::sync::Arc;

use pomdp_core::schema::SchemaType;
use pomdp_core::seed::{mix, mix2, rng};
use pomdp_core::{split_dataset, Dataset, Value};
use pps::{ComponentKind, Program, DEFAULT_MAX_SITES};
use rand::seq::{IndexedRandom, SliceRandom};
use rand_distr::{Beta, Distribution};
use serde::Serialize;
use thiserror::Error;

use crate::model::{Domain, ModelSet, Provenance};
use crate::proposer::{prompts, ProposalRequest, ProposeError, Proposer};

/// Absolute tolerance when comparing reward values.
pub const REWARD_TOL: f64 = 1e-6;

/// One component-level datum: the program's inputs and the observed output.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub inputs: Vec<Value>,
    pub outcome: Value,
}

/// Extracts the pairs a component model must explain.
pub fn component_pairs(d: &Dataset, domain: &Domain, kind: ComponentKind) -> Vec<Pair> {
    d.records
        .iter()
        .filter(|r| kind != ComponentKind::Initial || r.step == 0)
        .map(|r| {
            let a = r.action as i64;
            let inputs = domain.inputs(kind, Some(&r.state), a, Some(&r.next_state));
            let outcome = match kind {
                ComponentKind::Initial => r.state.clone(),
                ComponentKind::Transition => r.next_state.clone(),
                ComponentKind::Observation => r.observation.clone(),
                ComponentKind::Reward => Value::reward_outcome(r.reward, r.done),
            };
            Pair { inputs, outcome }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Miss {
    Uncovered(Pair),
    /// The candidate never produced a program (kept for error reporting).
    Parse(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub covered: usize,
    pub total: usize,
    pub misses: Vec<Miss>,
}

impl Coverage {
    /// Fraction of covered pairs; an empty pair set counts as fully covered.
    pub fn score(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.covered as f64 / self.total as f64
        }
    }
}

pub fn outcome_matches(kind: ComponentKind, model: &Value, data: &Value) -> bool {
    match kind {
        ComponentKind::Reward => match (model.as_reward_outcome(), data.as_reward_outcome()) {
            (Some((r1, d1)), Some((r2, d2))) => d1 == d2 && (r1 - r2).abs() <= REWARD_TOL,
            _ => false,
        },
        _ => model == data,
    }
}

/// Groups pair indices by encoded inputs, in order of first appearance.
fn group_by_condition(pairs: &[Pair]) -> Vec<Vec<usize>> {
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let mut key = Vec::new();
        for v in &p.inputs {
            v.encode_into(&mut key);
        }
        let g = *index.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

/// Scores `p` on `pairs`. Membership is exact when the program's sample
/// sites can be enumerated, otherwise it is tested against `k` runs.
pub fn coverage(p: &Program, pairs: &[Pair], k: usize, seed: u64) -> Coverage {
    let kind = p.kind();
    let mut covered = 0;
    let mut misses = Vec::new();
    for (gi, group) in group_by_condition(pairs).into_iter().enumerate() {
        let inputs = &pairs[group[0]].inputs;
        let hit: Box<dyn Fn(&Value) -> bool> = match p.enumerate_support(inputs, DEFAULT_MAX_SITES) {
            Ok(table) if kind == ComponentKind::Reward => {
                Box::new(move |y| table.entries().iter().any(|(v, _)| outcome_matches(kind, v, y)))
            }
            Ok(table) => Box::new(move |y| table.contains(y)),
            Err(_) => {
                let mut r = rng(mix(seed, gi as u64));
                let mut seen = HashSet::new();
                let mut outs = Vec::new();
                for _ in 0..k {
                    if let Ok(v) = p.run_with(inputs, &mut r) {
                        if seen.insert(v.encode()) {
                            outs.push(v);
                        }
                    }
                }
                Box::new(move |y| outs.iter().any(|v| outcome_matches(kind, v, y)))
            }
        };
        for i in group {
            if hit(&pairs[i].outcome) {
                covered += 1;
            } else {
                misses.push(Miss::Uncovered(pairs[i].clone()));
            }
        }
    }
    Coverage { covered, total: pairs.len(), misses }
}

/// Parses `source` and scores it; a parse failure scores 0 with one
/// synthetic miss carrying the message.
pub fn coverage_of_source(
    source: &str,
    kind: ComponentKind,
    schema: Arc<pomdp_core::DomainSchema>,
    pairs: &[Pair],
    k: usize,
    seed: u64,
) -> Coverage {
    match Program::parse(source, kind, schema) {
        Ok(p) => coverage(&p, pairs, k, seed),
        Err(e) => Coverage { covered: 0, total: pairs.len(), misses: vec![Miss::Parse(e.to_string())] },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub train: f64,
    pub test: f64,
    /// Coverage over train and test pairs together.
    pub pooled: f64,
    /// Misses on the training pairs only.
    pub errors: Vec<Miss>,
}

pub fn eval_model(p: &Program, train: &[Pair], test: &[Pair], k: usize, seed: u64) -> Evaluation {
    let tr = coverage(p, train, k, mix(seed, 0));
    let te = coverage(p, test, k, mix(seed, 1));
    let total = tr.total + te.total;
    let pooled = if total == 0 { 1.0 } else { (tr.covered + te.covered) as f64 / total as f64 };
    Evaluation { train: tr.score(), test: te.score(), pooled, errors: tr.misses }
}

#[derive(Debug, Clone)]
pub struct CandidateNode {
    pub id: usize,
    pub program: Program,
    pub alpha: f64,
    pub beta: f64,
    /// Pooled coverage.
    pub coverage: f64,
    pub coverage_train: f64,
    pub coverage_test: f64,
    pub errors: Vec<Miss>,
    pub parent: Option<usize>,
}

impl CandidateNode {
    fn new(id: usize, program: Program, e: Evaluation, parent: Option<usize>, c: f64) -> Self {
        CandidateNode {
            id,
            program,
            alpha: 1.0 + c * e.pooled,
            beta: 1.0 + c * (1.0 - e.pooled),
            coverage: e.pooled,
            coverage_train: e.train,
            coverage_test: e.test,
            errors: e.errors,
            parent,
        }
    }
}

/// Index of the node whose Beta draw is largest; ties go to the earliest.
pub fn thompson_select(tree: &[CandidateNode], seed: u64) -> usize {
    let params: Vec<(f64, f64)> = tree.iter().map(|n| (n.alpha, n.beta)).collect();
    select(&params, seed)
}

fn select(params: &[(f64, f64)], seed: u64) -> usize {
    assert!(!params.is_empty(), "thompson_select on an empty tree");
    let mut r = rng(seed);
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &(a, b)) in params.iter().enumerate() {
        let x = Beta::new(a, b).expect("Beta parameters are at least 1").sample(&mut r);
        if x > best.1 {
            best = (i, x);
        }
    }
    best.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    /// Refinement budget per component.
    pub max_refinements: usize,
    /// Thompson smoothing constant.
    pub smoothing: f64,
    /// Monte Carlo runs per membership query when enumeration fails.
    pub k_cov: usize,
    pub n_examples: usize,
    pub n_conditions: usize,
    pub n_samples: usize,
    pub test_fraction: f64,
    /// Proposer attempts per iteration before the iteration is skipped.
    pub attempts: usize,
    /// Candidate programs are written to `<cache_dir>/<component>/<node>.pps`.
    pub cache_dir: Option<PathBuf>,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            max_refinements: 25,
            smoothing: 25.0,
            k_cov: 100,
            n_examples: 5,
            n_conditions: 5,
            n_samples: 5,
            test_fraction: 0.3,
            attempts: 3,
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LearnError {
    #[error("{kind} model: no candidate program after {calls} proposer call(s); last error: {last}")]
    LearnFailure { kind: ComponentKind, calls: usize, last: String },
    #[error("{kind} model: dataset has no pairs for this component")]
    NoData { kind: ComponentKind },
}

impl LearnError {
    pub fn component(&self) -> ComponentKind {
        match self {
            LearnError::LearnFailure { kind, .. } | LearnError::NoData { kind } => *kind,
        }
    }
}

/// One line of the learning log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeLog {
    #[serde(serialize_with = "ser_kind")]
    pub component: ComponentKind,
    pub iteration: usize,
    pub node: usize,
    pub parent: Option<usize>,
    pub coverage_train: f64,
    pub coverage_test: f64,
    pub coverage_pooled: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub(crate) fn ser_kind<S: serde::Serializer>(k: &ComponentKind, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(k.as_str())
}

#[derive(Debug, Clone)]
pub struct Learned {
    pub program: Program,
    pub node_id: usize,
    pub coverage: f64,
    pub tree: Vec<CandidateNode>,
    /// Nodes produced by the proposer (excludes a reused `prev`).
    pub created: usize,
    pub proposer_calls: usize,
    /// True when `prev` was returned without consulting the proposer.
    pub kept: bool,
}

/// Per-component summary of one `learn_models` call.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LearnSummary {
    pub created: [usize; 4],
    pub proposer_calls: [usize; 4],
    pub coverage: [f64; 4],
    pub kept: [bool; 4],
}

/// Learns component programs, numbering nodes uniquely across calls.
pub struct Learner<'a> {
    pub cfg: LearnConfig,
    domain: Arc<Domain>,
    proposer: &'a dyn Proposer,
    next_id: [usize; 4],
    log: Vec<NodeLog>,
}

fn slot(kind: ComponentKind) -> usize {
    ComponentKind::ALL.iter().position(|&k| k == kind).expect("component kind")
}

impl<'a> Learner<'a> {
    pub fn new(domain: Arc<Domain>, cfg: LearnConfig, proposer: &'a dyn Proposer) -> Self {
        Learner { cfg, domain, proposer, next_id: [0; 4], log: Vec::new() }
    }

    /// Drains the node log accumulated since the last call.
    pub fn take_log(&mut self) -> Vec<NodeLog> {
        std::mem::take(&mut self.log)
    }

    fn fresh_id(&mut self, kind: ComponentKind) -> usize {
        let id = self.next_id[slot(kind)];
        self.next_id[slot(kind)] += 1;
        id
    }

    fn render_condition(&self, kind: ComponentKind, inputs: &[Value]) -> String {
        let s = &self.domain.schema;
        let state = |v: &Value| s.render(v, SchemaType::Record(&s.state));
        let action = |v: &Value| {
            let a = v.as_int().unwrap_or(-1);
            if a >= 0 && (a as usize) < s.actions.len() {
                s.action_name(a as usize).to_string()
            } else {
                a.to_string()
            }
        };
        match kind {
            ComponentKind::Initial => "empty_state".into(),
            ComponentKind::Transition | ComponentKind::Observation => {
                format!("state={}, action={}", state(&inputs[0]), action(&inputs[1]))
            }
            ComponentKind::Reward => {
                format!("state={}, action={}, next_state={}", state(&inputs[0]), action(&inputs[1]), state(&inputs[2]))
            }
        }
    }

    fn render_outcome(&self, kind: ComponentKind, v: &Value) -> String {
        let s = &self.domain.schema;
        match kind {
            ComponentKind::Initial | ComponentKind::Transition => s.render(v, SchemaType::Record(&s.state)),
            ComponentKind::Observation => s.render(v, SchemaType::Record(&s.observation)),
            ComponentKind::Reward => match v.as_reward_outcome() {
                Some((r, d)) => format!("reward={r:?}, done={}", if d { "True" } else { "False" }),
                None => v.to_string(),
            },
        }
    }

    fn examples(&self, kind: ComponentKind, train: &[Pair], seed: u64) -> Vec<String> {
        let mut r = rng(seed);
        train
            .choose_multiple(&mut r, self.cfg.n_examples)
            .map(|p| format!("{} -> {}", self.render_condition(kind, &p.inputs), self.render_outcome(kind, &p.outcome)))
            .collect()
    }

    /// Up to NC uncovered conditions, each with up to NS uncovered dataset
    /// outcomes and NS model outcomes.
    fn error_block(&self, node: &CandidateNode, seed: u64) -> String {
        let kind = node.program.kind();
        let uncovered: Vec<Pair> = node
            .errors
            .iter()
            .filter_map(|m| match m {
                Miss::Uncovered(p) => Some(p.clone()),
                Miss::Parse(_) => None,
            })
            .collect();
        let groups = group_by_condition(&uncovered);
        let mut r = rng(seed);
        let chosen: Vec<&Vec<usize>> = groups.choose_multiple(&mut r, self.cfg.n_conditions).collect();
        let mut out = Vec::new();
        for (gi, g) in chosen.into_iter().enumerate() {
            let inputs = &uncovered[g[0]].inputs;
            let cond = self.render_condition(kind, inputs);
            let mut members = g.clone();
            members.shuffle(&mut r);
            let data: Vec<String> =
                members.iter().take(self.cfg.n_samples).map(|&i| self.render_outcome(kind, &uncovered[i].outcome)).collect();
            let mut mr = rng(mix2(seed, 1, gi as u64));
            let model: Vec<String> = (0..self.cfg.n_samples)
                .map(|_| match node.program.run_with(inputs, &mut mr) {
                    Ok(v) => self.render_outcome(kind, &v),
                    Err(e) => format!("error: {e}"),
                })
                .collect();
            out.push(prompts::render_error_group(&cond, &data, &model));
        }
        out.join("\n")
    }

    fn cache(&self, kind: ComponentKind, node: &CandidateNode) {
        if let Some(dir) = &self.cfg.cache_dir {
            let dir = dir.join(kind.as_str());
            if std::fs::create_dir_all(&dir).is_ok() {
                let _ = std::fs::write(dir.join(format!("{}.pps", node.id)), node.program.to_file_contents());
            }
        }
    }

    fn record(&mut self, iteration: usize, node: &CandidateNode) {
        self.log.push(NodeLog {
            component: node.program.kind(),
            iteration,
            node: node.id,
            parent: node.parent,
            coverage_train: node.coverage_train,
            coverage_test: node.coverage_test,
            coverage_pooled: node.coverage,
            alpha: node.alpha,
            beta: node.beta,
        });
    }

    /// Calls the proposer up to `attempts` times.
    fn ask(&self, req: &ProposalRequest, calls: &mut usize) -> Result<Program, ProposeError> {
        let mut last = ProposeError::NoCodeBlock;
        for _ in 0..self.cfg.attempts.max(1) {
            *calls += 1;
            match self.proposer.propose(req) {
                Ok(p) => return Ok(p),
                Err(e) => last = e,
            }
        }
        Err(last)
    }

    /// Learns one component. See [`learn_model`].
    pub fn learn_model(&mut self, d: &Dataset, prev: Option<&Program>, kind: ComponentKind, seed: u64) -> Result<Learned, LearnError> {
        let c = self.cfg.smoothing;
        let k = self.cfg.k_cov;
        let (train_d, test_d) = match split_dataset(d, self.cfg.test_fraction, mix(seed, 1)) {
            Ok(split) => split,
            Err(_) => (d.clone(), Dataset::new(d.schema.clone())),
        };
        let train = component_pairs(&train_d, &self.domain, kind);
        let test = component_pairs(&test_d, &self.domain, kind);
        if train.is_empty() && test.is_empty() {
            return match prev {
                Some(p) => Ok(Learned { program: p.clone(), node_id: 0, coverage: 1.0, tree: vec![], created: 0, proposer_calls: 0, kept: true }),
                None => Err(LearnError::NoData { kind }),
            };
        }

        let mut tree: Vec<CandidateNode> = Vec::new();
        let mut calls = 0;
        let mut created = 0;
        let mut iterations = 0;
        let mut last_err = String::from("no proposer call made");
        let budget = self.cfg.max_refinements;

        if let Some(p) = prev {
            let e = eval_model(p, &train, &test, k, mix(seed, 2));
            let id = self.fresh_id(kind);
            let node = CandidateNode::new(id, p.clone(), e, None, c);
            self.record(0, &node);
            if node.coverage >= 1.0 {
                return Ok(Learned { program: p.clone(), node_id: id, coverage: 1.0, tree: vec![node], created: 0, proposer_calls: 0, kept: true });
            }
            tree.push(node);
        }
        // initial proposals get their own budget of M attempts
        let mut initial_tries = 0;
        while tree.is_empty() && initial_tries < budget.max(1) {
            let examples = self.examples(kind, &train, mix2(seed, 3, initial_tries as u64));
            let req = ProposalRequest::initial(kind, self.domain.schema.clone(), examples);
            initial_tries += 1;
            match self.ask(&req, &mut calls) {
                Ok(p) => {
                    let e = eval_model(&p, &train, &test, k, mix(seed, 2));
                    let node = CandidateNode::new(self.fresh_id(kind), p, e, None, c);
                    self.cache(kind, &node);
                    self.record(0, &node);
                    tree.push(node);
                    created += 1;
                }
                Err(e) => last_err = e.to_string(),
            }
        }
        if tree.is_empty() {
            return Err(LearnError::LearnFailure { kind, calls, last: last_err });
        }

        while iterations < budget && tree.iter().all(|n| n.coverage < 1.0) {
            let eligible: Vec<usize> = (0..tree.len()).filter(|&i| !tree[i].errors.is_empty()).collect();
            if eligible.is_empty() {
                break;
            }
            let params: Vec<(f64, f64)> = eligible.iter().map(|&i| (tree[i].alpha, tree[i].beta)).collect();
            let pi = eligible[select(&params, mix2(seed, 4, iterations as u64))];
            let block = self.error_block(&tree[pi], mix2(seed, 5, iterations as u64));
            let req = ProposalRequest::refinement(tree[pi].program.clone(), block);
            iterations += 1;
            let Ok(p) = self.ask(&req, &mut calls) else { continue };
            let e = eval_model(&p, &train, &test, k, mix(seed, 2));
            let cov = e.pooled;
            tree[pi].alpha += c * cov;
            tree[pi].beta += c * (1.0 - cov);
            let parent_id = tree[pi].id;
            let node = CandidateNode::new(self.fresh_id(kind), p, e, Some(parent_id), c);
            self.cache(kind, &node);
            self.record(iterations, &node);
            tree.push(node);
            created += 1;
        }

        let mut best = 0;
        for (i, n) in tree.iter().enumerate() {
            if n.coverage > tree[best].coverage {
                best = i;
            }
        }
        Ok(Learned {
            program: tree[best].program.clone(),
            node_id: tree[best].id,
            coverage: tree[best].coverage,
            created,
            proposer_calls: calls,
            kept: false,
            tree,
        })
    }

    /// Learns all four components independently; components whose previous
    /// program already covers the data are kept unchanged.
    pub fn learn_models(&mut self, d: &Dataset, prev: Option<&ModelSet>, seed: u64) -> Result<(ModelSet, LearnSummary), LearnError> {
        let mut programs = Vec::with_capacity(4);
        let mut provenance: [Provenance; 4] = Default::default();
        let mut summary = LearnSummary::default();
        for (i, kind) in ComponentKind::ALL.into_iter().enumerate() {
            let p = prev.map(|m| m.program(kind));
            let l = self.learn_model(d, p, kind, mix(seed, i as u64))?;
            summary.created[i] = l.created;
            summary.proposer_calls[i] = l.proposer_calls;
            summary.coverage[i] = l.coverage;
            summary.kept[i] = l.kept;
            provenance[i] = match (l.kept, prev) {
                (true, Some(m)) => m.provenance[i].clone(),
                _ => Provenance { node_id: l.node_id, coverage: l.coverage },
            };
            programs.push(l.program);
        }
        let programs: [Program; 4] = programs.try_into().expect("four components");
        Ok((ModelSet::with_provenance(self.domain.clone(), programs, provenance), summary))
    }
}

/// Runs the propose/refine tree for one component with a fresh [`Learner`].
pub fn learn_model(
    d: &Dataset,
    prev: Option<&Program>,
    kind: ComponentKind,
    domain: Arc<Domain>,
    cfg: &LearnConfig,
    proposer: &dyn Proposer,
    seed: u64,
) -> Result<Learned, LearnError> {
    Learner::new(domain, cfg.clone(), proposer).learn_model(d, prev, kind, seed)
}

pub fn learn_models(
    d: &Dataset,
    prev: Option<&ModelSet>,
    domain: Arc<Domain>,
    cfg: &LearnConfig,
    proposer: &dyn Proposer,
    seed: u64,
) -> Result<ModelSet, LearnError> {
    Learner::new(domain, cfg.clone(), proposer).learn_models(d, prev, seed).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thompson_prefers_the_stronger_node() {
        let a = (0..10_000).filter(|&s| select(&[(26.0, 1.0), (1.0, 26.0)], s) == 0).count();
        assert!(a >= 9_900, "{a}");
        let even = (0..10_000).filter(|&s| select(&[(3.0, 3.0), (3.0, 3.0)], s) == 0).count();
        assert!((even as f64 - 5_000.0).abs() < 3.0 * 50.0, "{even}");
        assert_eq!(select(&[(1.0, 1.0)], 9), 0);
    }

    #[test]
    fn reward_outcomes_compare_with_tolerance() {
        let k = ComponentKind::Reward;
        let a = Value::reward_outcome(1.0, true);
        assert!(outcome_matches(k, &a, &Value::reward_outcome(1.0 + 5e-7, true)));
        assert!(!outcome_matches(k, &a, &Value::reward_outcome(1.0 + 5e-6, true)));
        assert!(!outcome_matches(k, &a, &Value::reward_outcome(1.0, false)));
    }
}
