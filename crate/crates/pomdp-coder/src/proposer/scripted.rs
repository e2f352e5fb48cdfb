//! Deterministic proposers for tests and offline runs.

use std::collections::HashMap;
use std::path::Path;

use parking_lot::Mutex;
use pps::{ComponentKind, Program};

use super::{code_blocks, Completer, ProposalRequest, ProposeError, Proposer};
use crate::envs::Kind;

/// Replies from a fixed queue per component. The last entry repeats once the
/// queue is exhausted. Entries are either raw program source or a response
/// containing a fenced block.
#[derive(Debug, Default)]
pub struct ScriptedProposer {
    queues: HashMap<ComponentKind, Vec<String>>,
    calls: Mutex<HashMap<ComponentKind, usize>>,
}

impl ScriptedProposer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_queue(mut self, kind: ComponentKind, entries: Vec<String>) -> Self {
        self.queues.insert(kind, entries);
        self
    }

    /// Every component answers with the environment's ground-truth program.
    pub fn ground_truth(kind: Kind) -> Self {
        let mut p = Self::new();
        for (k, src) in ComponentKind::ALL.into_iter().zip(kind.sources()) {
            p.queues.insert(k, vec![src.to_string()]);
        }
        p
    }

    /// Reads `<component>.pps` or `<component>_<n>.pps` files; numbered files
    /// are queued in numeric order after the unnumbered one.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut found: HashMap<ComponentKind, Vec<(usize, String)>> = HashMap::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("pps") {
                continue;
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let (name, ix) = match stem.rsplit_once('_') {
                Some((n, i)) if i.parse::<usize>().is_ok() => (n, i.parse::<usize>().unwrap() + 1),
                _ => (stem, 0),
            };
            if let Some(k) = ComponentKind::parse(name) {
                found.entry(k).or_default().push((ix, std::fs::read_to_string(&path)?));
            }
        }
        let mut p = Self::new();
        for (k, mut v) in found {
            v.sort_by_key(|(i, _)| *i);
            p.queues.insert(k, v.into_iter().map(|(_, s)| s).collect());
        }
        Ok(p)
    }

    pub fn calls(&self, kind: ComponentKind) -> usize {
        self.calls.lock().get(&kind).copied().unwrap_or(0)
    }
}

impl Proposer for ScriptedProposer {
    fn propose(&self, req: &ProposalRequest) -> Result<Program, ProposeError> {
        let n = {
            let mut calls = self.calls.lock();
            let c = calls.entry(req.component).or_default();
            *c += 1;
            *c - 1
        };
        let queue = self.queues.get(&req.component).map(Vec::as_slice).unwrap_or_default();
        let Some(text) = queue.get(n).or(queue.last()) else {
            return Err(ProposeError::NoCodeBlock);
        };
        let source = code_blocks(text).pop().unwrap_or_else(|| text.clone());
        let source = match source.strip_prefix("# component:") {
            Some(rest) => rest.split_once('\n').map_or("", |(_, body)| body).to_string(),
            None => source,
        };
        Ok(Program::parse(&source, req.component, req.schema.clone())?)
    }
}

/// Completer replaying canned responses; records every prompt it receives.
#[derive(Debug, Default)]
pub struct ScriptedCompleter {
    responses: Vec<String>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedCompleter {
    pub fn new(responses: Vec<String>) -> Self {
        ScriptedCompleter { responses, prompts: Mutex::new(Vec::new()) }
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().clone()
    }
}

impl Completer for ScriptedCompleter {
    fn complete(&self, prompt: &str) -> Result<String, ProposeError> {
        let mut prompts = self.prompts.lock();
        let n = prompts.len();
        prompts.push(prompt.to_string());
        self.responses
            .get(n)
            .or(self.responses.last())
            .cloned()
            .ok_or_else(|| ProposeError::BadResponse("no scripted responses".into()))
    }
}
