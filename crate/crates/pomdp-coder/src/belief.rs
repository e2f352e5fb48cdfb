//! Particle beliefs and the particle-filter update.

use std::collections::BTreeMap;
use std::sync::Arc;

use pomdp_core::seed::{mix, mix2, rng};
use pomdp_core::Value;
use pps::NULL_ACTION;
use rand::Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{observation_seen, WorldModel};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BeliefError {
    #[error("initial model failed on every draw: {0:?}")]
    InitFailure(Vec<String>),
    #[error("no particle consistent with the observation after {draws} rejuvenation draws")]
    ParticleDepletion { draws: usize },
    #[error("a belief needs at least one particle")]
    Empty,
}

/// A multiset of state particles with an order-independent key.
#[derive(Debug, Clone)]
pub struct Belief {
    particles: Arc<[Value]>,
    key: [u8; 32],
    pub depth: u32,
    /// Set by the planner on beliefs reached through a terminal transition.
    pub terminal: bool,
}

impl PartialEq for Belief {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Belief {
    pub fn new(particles: Vec<Value>) -> Result<Self, BeliefError> {
        if particles.is_empty() {
            return Err(BeliefError::Empty);
        }
        let mut enc: Vec<Vec<u8>> = particles.iter().map(Value::encode).collect();
        enc.sort_unstable();
        let mut h = Sha256::new();
        for e in &enc {
            h.update((e.len() as u64).to_le_bytes());
            h.update(e);
        }
        Ok(Belief { particles: particles.into(), key: h.finalize().into(), depth: 0, terminal: false })
    }

    pub fn particles(&self) -> &[Value] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn key(&self) -> &[u8; 32] {
        &self.key
    }

    /// Distinct particles with their empirical frequencies, in encoding order.
    pub fn frequencies(&self) -> Vec<(Value, f64)> {
        let mut m: BTreeMap<Vec<u8>, (Value, usize)> = BTreeMap::new();
        for p in self.particles.iter() {
            m.entry(p.encode()).or_insert_with(|| (p.clone(), 0)).1 += 1;
        }
        let n = self.particles.len() as f64;
        m.into_values().map(|(v, c)| (v, c as f64 / n)).collect()
    }

    /// Fraction of particles satisfying `pred`.
    pub fn prob(&self, pred: impl Fn(&Value) -> bool) -> f64 {
        self.particles.iter().filter(|p| pred(p)).count() as f64 / self.particles.len() as f64
    }

    /// Most frequent particle; ties go to the smallest encoding.
    pub fn mode(&self) -> Value {
        let f = self.frequencies();
        let mut best = &f[0];
        for e in &f[1..] {
            if e.1 > best.1 {
                best = e;
            }
        }
        best.0.clone()
    }

    /// Shannon entropy of the particle frequencies, in nats.
    pub fn entropy(&self) -> f64 {
        entropy(self.frequencies().iter().map(|(_, p)| *p))
    }
}

pub fn entropy(ps: impl IntoIterator<Item = f64>) -> f64 {
    ps.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum()
}

/// Draws `n` particles in proportion to `weights` by systematic resampling:
/// one uniform offset, then `n` evenly spaced points on the CDF.
pub(crate) fn resample<R: Rng + ?Sized>(items: &[Value], weights: &[f64], n: usize, rng: &mut R) -> Vec<Value> {
    let total: f64 = weights.iter().sum();
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w / total;
        cdf.push(acc);
    }
    let offset: f64 = rng.random();
    (0..n)
        .map(|k| {
            let u = (k as f64 + offset) / n as f64;
            let i = cdf.partition_point(|&c| c <= u).min(items.len() - 1);
            items[i].clone()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub n_particles: usize,
    pub max_rejuvenation: usize,
    /// Observation draws per Monte Carlo membership query.
    pub rollouts: usize,
}

/// `n` independent draws from the initial model.
pub fn init_belief(m: &dyn WorldModel, n: usize, seed: u64) -> Result<Belief, BeliefError> {
    let mut particles = Vec::with_capacity(n);
    let mut errors = Vec::new();
    for i in 0..n {
        match m.sample_initial(&mut rng(mix(seed, i as u64))) {
            Ok(s) => particles.push(s),
            Err(e) => errors.push(e.to_string()),
        }
    }
    if particles.is_empty() {
        errors.dedup();
        return Err(BeliefError::InitFailure(errors));
    }
    if particles.len() < n {
        let w = vec![1.0; particles.len()];
        particles = resample(&particles, &w, n, &mut rng(mix2(seed, 1, 0)));
    }
    Belief::new(particles)
}

fn obs_weight(m: &dyn WorldModel, s2: &Value, a: i64, o: &Value, cfg: &FilterConfig, seed: u64) -> f64 {
    match m.observation_prob(s2, a, o) {
        Some(p) => p,
        None => observation_seen(m, s2, a, o, cfg.rollouts, &mut rng(seed)) as u8 as f64,
    }
}

/// Conditions a belief on an observation without moving the particles
/// (used for the observation emitted at reset).
pub fn condition(b: &Belief, a: i64, o: &Value, m: &dyn WorldModel, cfg: &FilterConfig, seed: u64) -> Result<Belief, BeliefError> {
    let w: Vec<f64> =
        b.particles().iter().enumerate().map(|(i, s)| obs_weight(m, s, a, o, cfg, mix2(seed, 2, i as u64))).collect();
    if w.iter().all(|&x| x <= 0.0) {
        return Err(BeliefError::ParticleDepletion { draws: 0 });
    }
    let mut out = Belief::new(resample(b.particles(), &w, b.len(), &mut rng(mix2(seed, 3, 0))))?;
    out.depth = b.depth;
    Ok(out)
}

/// One particle-filter step: propagate, weight by the observation, resample,
/// and rejuvenate from the pre-update particles when nothing survives.
pub fn update(b: &Belief, a: i64, o: &Value, m: &dyn WorldModel, cfg: &FilterConfig, seed: u64) -> Result<Belief, BeliefError> {
    let n = b.len();
    let mut next = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for (i, s) in b.particles().iter().enumerate() {
        let mut r = rng(mix(seed, i as u64));
        let Ok(s2) = m.sample_transition(s, a, &mut r) else { continue };
        let wi = obs_weight(m, &s2, a, o, cfg, mix2(seed, 4, i as u64));
        if wi > 0.0 {
            next.push(s2);
            w.push(wi);
        }
    }
    if next.is_empty() {
        (next, w) = rejuvenate(b, a, o, m, cfg, seed)?;
    }
    let mut out = Belief::new(resample(&next, &w, n, &mut rng(mix2(seed, 5, 0))))?;
    out.depth = b.depth + 1;
    Ok(out)
}

/// Fresh transitions from the pre-update particles. Uses exact tables when
/// every component involved can be enumerated, otherwise draws up to the
/// rejuvenation budget.
fn rejuvenate(
    b: &Belief,
    a: i64,
    o: &Value,
    m: &dyn WorldModel,
    cfg: &FilterConfig,
    seed: u64,
) -> Result<(Vec<Value>, Vec<f64>), BeliefError> {
    if let Some(found) = rejuvenate_exact(b, a, o, m) {
        return if found.0.is_empty() { Err(BeliefError::ParticleDepletion { draws: 0 }) } else { Ok(found) };
    }
    let mut r = rng(mix2(seed, 6, 0));
    let (mut next, mut w) = (Vec::new(), Vec::new());
    for j in 0..cfg.max_rejuvenation {
        let s = &b.particles()[r.random_range(0..b.len())];
        let Ok(s2) = m.sample_transition(s, a, &mut r) else { continue };
        let wi = obs_weight(m, &s2, a, o, cfg, mix2(seed, 7, j as u64));
        if wi > 0.0 {
            next.push(s2);
            w.push(wi);
            if next.len() == b.len() {
                break;
            }
        }
    }
    if next.is_empty() {
        return Err(BeliefError::ParticleDepletion { draws: cfg.max_rejuvenation });
    }
    Ok((next, w))
}

fn rejuvenate_exact(b: &Belief, a: i64, o: &Value, m: &dyn WorldModel) -> Option<(Vec<Value>, Vec<f64>)> {
    let (mut next, mut w) = (Vec::new(), Vec::new());
    for (s, ps) in b.frequencies() {
        let t = m.transition_support(&s, a)?;
        for (s2, pt) in t.entries() {
            let po = m.observation_prob(s2, a, o)?;
            if po > 0.0 {
                next.push(s2.clone());
                w.push(ps * pt * po);
            }
        }
    }
    Some((next, w))
}

/// Particle filter over an action/observation history. When the local
/// rejuvenation fails it rebuilds the belief from the initial model by
/// replaying the whole history.
pub struct Filter {
    model: Arc<dyn WorldModel>,
    cfg: FilterConfig,
    seed: u64,
    history: Vec<(i64, Value)>,
    belief: Belief,
    pub replays: usize,
}

impl Filter {
    /// Initial belief conditioned on the reset observation.
    pub fn new(model: Arc<dyn WorldModel>, cfg: FilterConfig, o0: &Value, seed: u64) -> Result<Self, BeliefError> {
        let b0 = init_belief(&*model, cfg.n_particles, seed)?;
        let history = vec![(NULL_ACTION, o0.clone())];
        let mut f = Filter { model, cfg, seed, history, belief: b0.clone(), replays: 0 };
        f.belief = match condition(&b0, NULL_ACTION, o0, &*f.model, &cfg, mix(seed, 1)) {
            Ok(b) => b,
            Err(_) => f.replay()?,
        };
        Ok(f)
    }

    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    pub fn model(&self) -> &Arc<dyn WorldModel> {
        &self.model
    }

    pub fn update(&mut self, a: i64, o: &Value) -> Result<(), BeliefError> {
        let step = self.history.len() as u64;
        self.history.push((a, o.clone()));
        self.belief = match update(&self.belief, a, o, &*self.model, &self.cfg, mix2(self.seed, 10, step)) {
            Ok(b) => b,
            Err(_) => self.replay()?,
        };
        Ok(())
    }

    fn replay(&mut self) -> Result<Belief, BeliefError> {
        self.replays += 1;
        let m = &*self.model;
        let mut r = rng(mix2(self.seed, 11, self.history.len() as u64));
        let mut found = Vec::new();
        let mut draws = 0;
        'draw: while draws < self.cfg.max_rejuvenation && found.len() < self.cfg.n_particles {
            draws += 1;
            let Ok(mut s) = m.sample_initial(&mut r) else { continue };
            for (t, (a, o)) in self.history.iter().enumerate() {
                if t > 0 {
                    let Ok(s2) = m.sample_transition(&s, *a, &mut r) else { continue 'draw };
                    s = s2;
                }
                let ok = match m.observation_prob(&s, *a, o) {
                    Some(p) => p > 0.0,
                    None => observation_seen(m, &s, *a, o, self.cfg.rollouts, &mut r),
                };
                if !ok {
                    continue 'draw;
                }
            }
            found.push(s);
        }
        if found.is_empty() {
            return Err(BeliefError::ParticleDepletion { draws });
        }
        let w = vec![1.0; found.len()];
        let mut b = Belief::new(resample(&found, &w, self.cfg.n_particles, &mut r))?;
        b.depth = self.history.len() as u32 - 1;
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(xs: &[i64]) -> Vec<Value> {
        xs.iter().map(|&x| Value::Int(x)).collect()
    }

    #[test]
    fn entropy_matches_direct_formula() {
        assert_eq!(Belief::new(ints(&[3; 10])).unwrap().entropy(), 0.0);
        let half = Belief::new(ints(&[0, 1, 0, 1])).unwrap();
        assert!((half.entropy() - std::f64::consts::LN_2).abs() < 1e-12);
        let mut xs = vec![0; 7];
        xs.extend([1, 1, 2]);
        let b = Belief::new(ints(&xs)).unwrap();
        let direct = -(0.7f64 * 0.7f64.ln() + 0.2 * 0.2f64.ln() + 0.1 * 0.1f64.ln());
        assert!((b.entropy() - direct).abs() < 1e-12);
    }

    #[test]
    fn key_ignores_order_but_not_multiplicity() {
        let a = Belief::new(ints(&[1, 2, 3, 3])).unwrap();
        let b = Belief::new(ints(&[3, 1, 3, 2])).unwrap();
        let c = Belief::new(ints(&[1, 2, 2, 3])).unwrap();
        assert_eq!(a.key(), b.key());
        assert_ne!(a.key(), c.key());
        assert!(Belief::new(vec![]).is_err());
    }

    #[test]
    fn mode_prefers_frequency() {
        assert_eq!(Belief::new(ints(&[5, 2, 5, 9])).unwrap().mode(), Value::Int(5));
    }

    #[test]
    fn resample_respects_zero_weights() {
        let items = ints(&[0, 1, 2]);
        let out = resample(&items, &[0.0, 1.0, 0.0], 20, &mut rng(3));
        assert!(out.iter().all(|v| *v == Value::Int(1)));
    }

    #[test]
    fn resample_counts_stay_within_one_of_expectation() {
        let items = ints(&[0, 1, 2]);
        let w = [0.2, 0.5, 0.3];
        for seed in 0..50 {
            let out = resample(&items, &w, 37, &mut rng(seed));
            for (i, wi) in w.iter().enumerate() {
                let c = out.iter().filter(|v| **v == Value::Int(i as i64)).count() as f64;
                assert!((c - 37.0 * wi).abs() < 1.0 + 1e-9, "seed {seed}: {c}");
            }
        }
    }
}
