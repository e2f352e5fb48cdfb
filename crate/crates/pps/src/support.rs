//! Exact output distributions by exhaustive branch enumeration.

use std::collections::HashMap;

use pomdp_core::Value;
use rand::Rng;
use thiserror::Error;

use crate::compile::Compiled;
use crate::error::RunError;
use crate::interp::{execute, Chooser, Halt};

pub const DEFAULT_MAX_SITES: usize = 16;
/// Upper bound on complete paths explored by one enumeration.
pub const MAX_PATHS: usize = 1 << 17;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TooManySites {
    #[error("a path reached more than {0} sample sites")]
    Sites(usize),
    #[error("more than {0} execution paths")]
    Paths(usize),
}

/// Exact distribution over program outputs, keyed by canonical encoding.
#[derive(Debug, Clone, Default)]
pub struct SupportTable {
    entries: Vec<(Value, f64)>,
    index: HashMap<Vec<u8>, usize>,
    errors: Vec<(RunError, f64)>,
}

impl SupportTable {
    /// Table from explicit outcome weights, normalized to sum to one.
    /// Repeated outcomes are merged.
    pub fn from_weights(weights: impl IntoIterator<Item = (Value, f64)>) -> Self {
        let mut t = SupportTable::default();
        for (v, w) in weights {
            t.add(v, w);
        }
        let total = t.total();
        if total > 0.0 {
            for e in &mut t.entries {
                e.1 /= total;
            }
        }
        t
    }

    fn add(&mut self, v: Value, p: f64) {
        let key = v.encode();
        match self.index.get(&key) {
            Some(&i) => self.entries[i].1 += p,
            None => {
                self.index.insert(key, self.entries.len());
                self.entries.push((v, p));
            }
        }
    }

    /// Probability of `v`; zero when outside the support.
    pub fn prob(&self, v: &Value) -> f64 {
        self.prob_encoded(&v.encode())
    }

    pub fn prob_encoded(&self, key: &[u8]) -> f64 {
        self.index.get(key).map_or(0.0, |&i| self.entries[i].1)
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.prob(v) > 0.0
    }

    /// Outcomes in first-discovery order.
    pub fn entries(&self) -> &[(Value, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Probability mass of successful outcomes; below 1 when branches error.
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// Erroring branches and their probability mass.
    pub fn errors(&self) -> &[(RunError, f64)] {
        &self.errors
    }

    /// Draws an outcome in proportion to its probability, or `None` when
    /// every branch errored.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&Value> {
        let total = self.total();
        if self.entries.is_empty() || total <= 0.0 {
            return None;
        }
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        for (v, p) in &self.entries {
            acc += p;
            if u < acc {
                return Some(v);
            }
        }
        self.entries.last().map(|(v, _)| v)
    }
}

struct ReplayChooser<'a> {
    prefix: &'a [usize],
    taken: Vec<usize>,
    prob: f64,
    /// `(depth, alternatives)` for every site first reached on this run.
    fresh: Vec<(usize, Vec<usize>)>,
    max_sites: usize,
    overflow: bool,
}

impl Chooser for ReplayChooser<'_> {
    fn choose(&mut self, _site: &str, probs: &[f64]) -> Option<usize> {
        let depth = self.taken.len();
        if depth >= self.max_sites {
            self.overflow = true;
            return None;
        }
        let k = if depth < self.prefix.len() {
            self.prefix[depth]
        } else {
            let mut positive = probs.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, _)| i);
            let first = positive.next()?;
            let rest: Vec<usize> = positive.collect();
            if !rest.is_empty() {
                self.fresh.push((depth, rest));
            }
            first
        };
        self.prob *= probs[k];
        self.taken.push(k);
        Some(k)
    }
}

pub(crate) fn enumerate(prog: &Compiled, inputs: &[Value], max_sites: usize) -> Result<SupportTable, TooManySites> {
    let mut table = SupportTable::default();
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    let mut paths = 0usize;
    while let Some(prefix) = stack.pop() {
        paths += 1;
        if paths > MAX_PATHS {
            return Err(TooManySites::Paths(MAX_PATHS));
        }
        let mut ch = ReplayChooser { prefix: &prefix, taken: Vec::new(), prob: 1.0, fresh: Vec::new(), max_sites, overflow: false };
        let mut steps = 0;
        let res = execute(prog, inputs, &mut ch, &mut steps);
        if ch.overflow {
            return Err(TooManySites::Sites(max_sites));
        }
        match res {
            Ok(v) => table.add(v, ch.prob),
            Err(Halt::Err(e)) => match table.errors.iter_mut().find(|(x, _)| *x == e) {
                Some(slot) => slot.1 += ch.prob,
                None => table.errors.push((e, ch.prob)),
            },
            Err(Halt::Abort) => {}
        }
        // push deeper alternatives last so they are explored first
        for (depth, alts) in ch.fresh.iter() {
            for &alt in alts.iter().rev() {
                let mut p = ch.taken[..*depth].to_vec();
                p.push(alt);
                stack.push(p);
            }
        }
    }
    Ok(table)
}
