//! Transition records, datasets, JSONL persistence and episode-level splits.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::schema::{DomainSchema, FieldType, RecordDef, SchemaType};
use crate::value::{Grid, Value};

/// One step of an episode with the post-hoc true states attached.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub episode_id: u64,
    pub step: u64,
    pub state: Value,
    pub action: usize,
    pub observation: Value,
    pub reward: f64,
    pub next_state: Value,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Arc<DomainSchema>,
    pub records: Vec<TransitionRecord>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("insufficient episodes: need at least 2, found {0}")]
    InsufficientEpisodes(usize),
    #[error("test fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("line {line}: field '{field}': {msg}")]
    Malformed { line: usize, field: String, msg: String },
    #[error("record {index}: field '{field}' does not conform: {msg}")]
    Nonconforming { index: usize, field: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Dataset {
    pub fn new(schema: Arc<DomainSchema>) -> Self {
        Self { schema, records: Vec::new() }
    }

    /// Distinct episode ids in first-appearance order.
    pub fn episode_ids(&self) -> Vec<u64> {
        let mut seen = BTreeSet::new();
        self.records.iter().filter(|r| seen.insert(r.episode_id)).map(|r| r.episode_id).collect()
    }

    pub fn next_episode_id(&self) -> u64 {
        self.records.iter().map(|r| r.episode_id + 1).max().unwrap_or(0)
    }

    pub fn episodes(&self) -> BTreeMap<u64, Vec<&TransitionRecord>> {
        let mut out: BTreeMap<u64, Vec<&TransitionRecord>> = BTreeMap::new();
        for r in &self.records {
            out.entry(r.episode_id).or_default().push(r);
        }
        out
    }

    /// Checks schema conformance and per-episode step contiguity.
    pub fn check(&self) -> Result<(), DatasetError> {
        let s = &self.schema;
        let mut next_step: BTreeMap<u64, u64> = BTreeMap::new();
        for (index, r) in self.records.iter().enumerate() {
            let bad = |field: &str, msg: String| DatasetError::Nonconforming { index, field: field.into(), msg };
            if let Some(e) = s.conformance_error(&r.state, SchemaType::Record(&s.state)) {
                return Err(bad("state", e));
            }
            if let Some(e) = s.conformance_error(&r.next_state, SchemaType::Record(&s.state)) {
                return Err(bad("next_state", e));
            }
            if let Some(e) = s.conformance_error(&r.observation, SchemaType::Record(&s.observation)) {
                return Err(bad("observation", e));
            }
            if r.action >= s.actions.len() {
                return Err(bad("action", format!("index {} out of range", r.action)));
            }
            if !r.reward.is_finite() {
                return Err(bad("reward", "not finite".into()));
            }
            let expect = next_step.entry(r.episode_id).or_insert(0);
            if r.step != *expect {
                return Err(bad("step", format!("expected {}, found {}", expect, r.step)));
            }
            *expect += 1;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, w: &mut W) -> Result<(), DatasetError> {
        let header = serde_json::to_string(self.schema.as_ref()).map_err(std::io::Error::other)?;
        writeln!(w, "{header}")?;
        for r in &self.records {
            writeln!(w, "{}", record_to_json(&self.schema, r))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        Self::read_jsonl(BufReader::new(File::open(path)?))
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, DatasetError> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| malformed(1, "schema", "missing header line"))??;
        let schema: DomainSchema =
            serde_json::from_str(&header).map_err(|e| malformed(1, "schema", &e.to_string()))?;
        schema.check().map_err(|e| malformed(1, "schema", &e.to_string()))?;
        let schema = Arc::new(schema);
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(record_from_json(&schema, &line, line_no)?);
        }
        let d = Dataset { schema, records };
        d.check()?;
        Ok(d)
    }
}

fn malformed(line: usize, field: &str, msg: &str) -> DatasetError {
    DatasetError::Malformed { line, field: field.into(), msg: msg.into() }
}

fn record_to_json(s: &DomainSchema, r: &TransitionRecord) -> Json {
    json!({
        "episode": r.episode_id,
        "step": r.step,
        "state": value_to_json(s, &r.state, SchemaType::Record(&s.state)),
        "action": s.action_name(r.action),
        "observation": value_to_json(s, &r.observation, SchemaType::Record(&s.observation)),
        "reward": r.reward,
        "next_state": value_to_json(s, &r.next_state, SchemaType::Record(&s.state)),
        "done": r.done,
    })
}

const RECORD_KEYS: [&str; 8] = ["episode", "step", "state", "action", "observation", "reward", "next_state", "done"];

fn record_from_json(s: &DomainSchema, line: &str, line_no: usize) -> Result<TransitionRecord, DatasetError> {
    let j: Json = serde_json::from_str(line).map_err(|e| malformed(line_no, "<line>", &e.to_string()))?;
    let obj = j.as_object().ok_or_else(|| malformed(line_no, "<line>", "expected a JSON object"))?;
    for k in obj.keys() {
        if !RECORD_KEYS.contains(&k.as_str()) {
            return Err(malformed(line_no, k, "unexpected key"));
        }
    }
    let get = |k: &str| obj.get(k).ok_or_else(|| malformed(line_no, k, "missing"));
    let uint = |k: &str| get(k)?.as_u64().ok_or_else(|| malformed(line_no, k, "expected a non-negative integer"));
    let action = match get("action")? {
        Json::String(name) => {
            s.action_index(name).ok_or_else(|| malformed(line_no, "action", &format!("unknown action '{name}'")))?
        }
        Json::Number(n) => n
            .as_u64()
            .filter(|&a| (a as usize) < s.actions.len())
            .ok_or_else(|| malformed(line_no, "action", "index out of range"))? as usize,
        _ => return Err(malformed(line_no, "action", "expected an action name")),
    };
    let reward = get("reward")?
        .as_f64()
        .filter(|r| r.is_finite())
        .ok_or_else(|| malformed(line_no, "reward", "expected a finite number"))?;
    let done = get("done")?.as_bool().ok_or_else(|| malformed(line_no, "done", "expected a boolean"))?;
    let val = |k: &str, rec: &RecordDef| {
        json_to_value(s, get(k)?, SchemaType::Record(rec)).map_err(|(path, msg)| {
            let field = if path.is_empty() { k.to_string() } else { format!("{k}.{path}") };
            malformed(line_no, &field, &msg)
        })
    };
    Ok(TransitionRecord {
        episode_id: uint("episode")?,
        step: uint("step")?,
        state: val("state", &s.state)?,
        action,
        observation: val("observation", &s.observation)?,
        reward,
        next_state: val("next_state", &s.state)?,
        done,
    })
}

/// JSON rendering of a value: records as objects, enums as variant names,
/// grids as arrays of rows.
pub fn value_to_json(s: &DomainSchema, v: &Value, ty: SchemaType<'_>) -> Json {
    match (ty, v) {
        (SchemaType::Record(rec), Value::Record(fields)) => {
            let mut m = Map::new();
            for ((name, fv), def) in fields.iter().zip(&rec.fields) {
                m.insert(name.to_string(), value_to_json(s, fv, SchemaType::Field(&def.ty)));
            }
            Json::Object(m)
        }
        (SchemaType::Field(FieldType::Enum { name }), Value::Enum(ix)) => Json::String(s.variant_name(name, *ix)),
        (SchemaType::Field(FieldType::Grid { cell, .. }), Value::Grid(g)) => Json::Array(
            (0..g.height())
                .map(|y| Json::Array((0..g.width()).map(|x| Json::String(s.variant_name(cell, g.get(x, y)))).collect()))
                .collect(),
        ),
        (_, Value::Int(i)) => json!(i),
        (_, Value::Bool(b)) => json!(b),
        (_, Value::Real(r)) => json!(r),
        (_, other) => Json::String(other.to_string()),
    }
}

/// Inverse of [`value_to_json`]; errors carry a dotted field path.
pub fn json_to_value(s: &DomainSchema, j: &Json, ty: SchemaType<'_>) -> Result<Value, (String, String)> {
    match ty {
        SchemaType::Record(rec) => {
            let obj = j.as_object().ok_or_else(|| (String::new(), format!("expected {} object", rec.name)))?;
            if let Some(k) = obj.keys().find(|k| rec.field(k).is_none()) {
                return Err((k.clone(), "unknown field".into()));
            }
            let mut fields = Vec::with_capacity(rec.fields.len());
            for def in &rec.fields {
                let fj = obj.get(&def.name).ok_or_else(|| (def.name.clone(), "missing".to_string()))?;
                let fv = json_to_value(s, fj, SchemaType::Field(&def.ty)).map_err(|(p, m)| {
                    (if p.is_empty() { def.name.clone() } else { format!("{}.{}", def.name, p) }, m)
                })?;
                fields.push((Arc::from(def.name.as_str()), fv));
            }
            Ok(Value::Record(fields))
        }
        SchemaType::Field(ft) => {
            let err = |m: String| (String::new(), m);
            let v = match ft {
                FieldType::Int { .. } => Value::Int(j.as_i64().ok_or_else(|| err("expected integer".into()))?),
                FieldType::Bool => Value::Bool(j.as_bool().ok_or_else(|| err("expected boolean".into()))?),
                FieldType::Enum { name } => Value::Enum(variant(s, name, j).map_err(err)?),
                FieldType::Grid { width, height, cell } => {
                    let rows = j.as_array().ok_or_else(|| err("expected array of rows".into()))?;
                    if rows.len() != *height {
                        return Err(err(format!("expected {height} rows, found {}", rows.len())));
                    }
                    let mut cells = Vec::with_capacity(width * height);
                    for row in rows {
                        let row = row.as_array().filter(|r| r.len() == *width);
                        let row = row.ok_or_else(|| err(format!("expected rows of {width} cells")))?;
                        for c in row {
                            cells.push(variant(s, cell, c).map_err(err)?);
                        }
                    }
                    Value::Grid(Arc::new(Grid::from_cells(*width, *height, cells)))
                }
            };
            match s.conformance_error(&v, ty) {
                Some(e) => Err(err(e)),
                None => Ok(v),
            }
        }
    }
}

fn variant(s: &DomainSchema, enum_name: &str, j: &Json) -> Result<u32, String> {
    let name = j.as_str().ok_or_else(|| format!("expected {enum_name} variant name"))?;
    s.enum_def(enum_name)
        .and_then(|e| e.variants.iter().position(|v| v == name))
        .map(|i| i as u32)
        .ok_or_else(|| format!("unknown {enum_name} variant '{name}'"))
}

/// Splits whole episodes into train and test sets. The test side receives
/// `round(n * test_fraction)` episodes, clamped so both sides are nonempty.
pub fn split_dataset(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::BadFraction(test_fraction));
    }
    let mut ids = d.episode_ids();
    ids.sort_unstable();
    let n = ids.len();
    if n < 2 {
        return Err(DatasetError::InsufficientEpisodes(n));
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    ids.shuffle(&mut crate::seed::rng(seed));
    let test_ids: BTreeSet<u64> = ids[..n_test].iter().copied().collect();
    let (test, train): (Vec<_>, Vec<_>) = d.records.iter().cloned().partition(|r| test_ids.contains(&r.episode_id));
    Ok((
        Dataset { schema: d.schema.clone(), records: train },
        Dataset { schema: d.schema.clone(), records: test },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::tests::tiger;
    use proptest::prelude::*;

    fn tiger_dataset(episodes: u64, steps: u64) -> Dataset {
        let mut d = Dataset::new(Arc::new(tiger()));
        for e in 0..episodes {
            let loc = (e % 2) as i64;
            for t in 0..steps {
                let s = Value::record([("tiger_location", Value::Int(loc))]);
                let last = t + 1 == steps;
                d.records.push(TransitionRecord {
                    episode_id: e,
                    step: t,
                    state: s.clone(),
                    action: if last { 1 - loc as usize } else { 2 },
                    observation: Value::record([("obs", Value::Enum(if last { 2 } else { loc as u32 }))]),
                    reward: if last { 10.0 } else { -1.0 },
                    next_state: s,
                    done: last,
                });
            }
        }
        d
    }

    fn round_trip(d: &Dataset) -> Dataset {
        let mut buf = Vec::new();
        d.write_jsonl(&mut buf).unwrap();
        Dataset::read_jsonl(&buf[..]).unwrap()
    }

    #[test]
    fn empty_dataset_is_header_only() {
        let d = tiger_dataset(0, 0);
        let mut buf = Vec::new();
        d.write_jsonl(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
        assert_eq!(round_trip(&d), d);
    }

    #[test]
    fn three_step_episode_round_trips() {
        let d = tiger_dataset(1, 3);
        assert_eq!(d.records.len(), 3);
        assert_eq!(round_trip(&d), d);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        let d = tiger_dataset(4, 3);
        d.save(&p).unwrap();
        assert_eq!(Dataset::load(&p).unwrap(), d);
    }

    #[test]
    fn record_keys_are_exact() {
        let d = tiger_dataset(1, 2);
        let mut buf = Vec::new();
        d.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rec: Json = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
        let keys: BTreeSet<&str> = rec.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, RECORD_KEYS.into_iter().collect());
        assert_eq!(rec["observation"]["obs"], "HEAR_LEFT");
    }

    #[test]
    fn nan_reward_is_rejected_with_line_number() {
        let d = tiger_dataset(1, 2);
        let mut buf = Vec::new();
        d.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let bad = text.replacen("\"reward\":-1.0", "\"reward\":\"NaN\"", 1);
        match Dataset::read_jsonl(bad.as_bytes()) {
            Err(DatasetError::Malformed { line, field, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "reward");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_mismatch_names_field() {
        let d = tiger_dataset(1, 1);
        let mut buf = Vec::new();
        d.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("\"tiger_location\":0", "\"tiger_location\":7");
        let err = Dataset::read_jsonl(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("state.tiger_location"), "{err}");
    }

    #[test]
    fn split_counts_and_determinism() {
        let d = tiger_dataset(10, 2);
        let (tr, te) = split_dataset(&d, 0.3, 7).unwrap();
        assert_eq!(tr.episode_ids().len(), 7);
        assert_eq!(te.episode_ids().len(), 3);
        let (tr2, te2) = split_dataset(&d, 0.3, 7).unwrap();
        assert_eq!((tr, te), (tr2, te2));
    }

    #[test]
    fn split_refuses_single_episode() {
        let d = tiger_dataset(1, 3);
        let err = split_dataset(&d, 0.3, 0).unwrap_err();
        assert!(err.to_string().contains("insufficient episodes"));
    }

    #[test]
    fn every_episode_is_tested_under_some_seed() {
        let d = tiger_dataset(10, 1);
        let mut seen = BTreeSet::new();
        for seed in 0..100 {
            let (_, te) = split_dataset(&d, 0.3, seed).unwrap();
            seen.extend(te.episode_ids());
        }
        assert_eq!(seen.len(), 10);
    }

    proptest! {
        #[test]
        fn split_partitions_records(n in 2u64..30, frac in 0.05f64..0.95, seed in any::<u64>()) {
            let d = tiger_dataset(n, 2);
            let (tr, te) = split_dataset(&d, frac, seed).unwrap();
            prop_assert_eq!(tr.records.len() + te.records.len(), d.records.len());
            let a: BTreeSet<u64> = tr.episode_ids().into_iter().collect();
            let b: BTreeSet<u64> = te.episode_ids().into_iter().collect();
            prop_assert!(a.is_disjoint(&b));
            prop_assert!(!a.is_empty() && !b.is_empty());
            for r in &d.records {
                prop_assert!(tr.records.contains(r) != te.records.contains(r));
            }
        }
    }
}
