//! Domain schemas: the declared shape of states, observations, and actions.
//!
//! A schema is authored per environment and shown verbatim (as a Python-like
//! class listing) to the program proposer. Every [`Value`] flowing through the
//! system is validated against one of the schema's record types.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::{Grid, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("duplicate action name '{0}'")]
    DuplicateAction(String),
    #[error("enum '{0}' has no variants")]
    EmptyEnum(String),
    #[error("duplicate enum name '{0}'")]
    DuplicateEnum(String),
    #[error("field '{field}' has an empty range [{lo}, {hi}]")]
    EmptyRange { field: String, lo: i64, hi: i64 },
    #[error("grid field '{0}' has a zero dimension")]
    EmptyGrid(String),
    #[error("field '{field}' references unknown enum '{name}'")]
    UnknownEnum { field: String, name: String },
    #[error("duplicate field '{field}' in record '{record}'")]
    DuplicateField { record: String, field: String },
    #[error("schema declares no actions")]
    NoActions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumDef {
    pub name: String,
    pub variants: Vec<String>,
}

/// Type of one record field. Grids are row-major with explicit dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldType {
    Int { lo: i64, hi: i64 },
    Bool,
    Enum { name: String },
    Grid { width: usize, height: usize, cell: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDef {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: FieldType,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub doc: String,
}

impl FieldDef {
    pub fn new(name: impl Into<String>, ty: FieldType) -> Self {
        Self { name: name.into(), ty, doc: String::new() }
    }

    pub fn with_doc(mut self, doc: impl Into<String>) -> Self {
        self.doc = doc.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordDef {
    pub name: String,
    pub fields: Vec<FieldDef>,
}

impl RecordDef {
    pub fn field(&self, name: &str) -> Option<&FieldDef> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn field_names(&self) -> Vec<Arc<str>> {
        self.fields.iter().map(|f| Arc::from(f.name.as_str())).collect()
    }
}

/// Which record of the schema a value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    State,
    Observation,
}

/// A type a [`Value`] can be validated against.
#[derive(Debug, Clone, Copy)]
pub enum SchemaType<'a> {
    Field(&'a FieldType),
    Record(&'a RecordDef),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSchema {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub goal_description: String,
    pub enums: Vec<EnumDef>,
    pub actions: Vec<String>,
    pub state: RecordDef,
    pub observation: RecordDef,
}

impl DomainSchema {
    /// Checks the structural invariants: unique action names, non-empty
    /// enums, ordered int ranges, non-zero grid dimensions.
    pub fn check(&self) -> Result<(), SchemaError> {
        if self.actions.is_empty() {
            return Err(SchemaError::NoActions);
        }
        let mut seen = HashSet::new();
        for a in &self.actions {
            if !seen.insert(a.as_str()) {
                return Err(SchemaError::DuplicateAction(a.clone()));
            }
        }
        let mut enum_names = HashSet::new();
        for e in &self.enums {
            if e.variants.is_empty() {
                return Err(SchemaError::EmptyEnum(e.name.clone()));
            }
            if !enum_names.insert(e.name.as_str()) {
                return Err(SchemaError::DuplicateEnum(e.name.clone()));
            }
        }
        for rec in [&self.state, &self.observation] {
            let mut names = HashSet::new();
            for f in &rec.fields {
                if !names.insert(f.name.as_str()) {
                    return Err(SchemaError::DuplicateField {
                        record: rec.name.clone(),
                        field: f.name.clone(),
                    });
                }
                match &f.ty {
                    FieldType::Int { lo, hi } if lo > hi => {
                        return Err(SchemaError::EmptyRange { field: f.name.clone(), lo: *lo, hi: *hi })
                    }
                    FieldType::Enum { name } | FieldType::Grid { cell: name, .. }
                        if self.enum_def(name).is_none() =>
                    {
                        return Err(SchemaError::UnknownEnum { field: f.name.clone(), name: name.clone() })
                    }
                    FieldType::Grid { width, height, .. } if *width == 0 || *height == 0 => {
                        return Err(SchemaError::EmptyGrid(f.name.clone()))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn enum_def(&self, name: &str) -> Option<&EnumDef> {
        self.enums.iter().find(|e| e.name == name)
    }

    pub fn enum_index(&self, name: &str) -> Option<usize> {
        self.enums.iter().position(|e| e.name == name)
    }

    /// Index of `variant` within enum `enum_name`.
    pub fn variant_index(&self, enum_name: &str, variant: &str) -> Option<u32> {
        self.enum_def(enum_name)?.variants.iter().position(|v| v == variant).map(|i| i as u32)
    }

    pub fn record(&self, kind: RecordKind) -> &RecordDef {
        match kind {
            RecordKind::State => &self.state,
            RecordKind::Observation => &self.observation,
        }
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    /// Name of the action enumeration as shown to the proposer, e.g. `TigerActions`.
    pub fn actions_type_name(&self) -> String {
        format!("{}Actions", self.name)
    }

    pub fn validate_state(&self, v: &Value) -> bool {
        self.validate(v, SchemaType::Record(&self.state))
    }

    pub fn validate_observation(&self, v: &Value) -> bool {
        self.validate(v, SchemaType::Record(&self.observation))
    }

    /// True iff `value` structurally conforms to `ty`.
    pub fn validate(&self, value: &Value, ty: SchemaType<'_>) -> bool {
        self.conformance_error(value, ty).is_none()
    }

    /// Like [`validate`](Self::validate) but names the first offending field.
    pub fn conformance_error(&self, value: &Value, ty: SchemaType<'_>) -> Option<String> {
        match ty {
            SchemaType::Record(rec) => {
                let Value::Record(fields) = value else {
                    return Some(format!("expected record {}", rec.name));
                };
                if fields.len() != rec.fields.len() {
                    return Some(format!(
                        "record {} expects {} fields, got {}",
                        rec.name,
                        rec.fields.len(),
                        fields.len()
                    ));
                }
                for ((name, v), def) in fields.iter().zip(&rec.fields) {
                    if name.as_ref() != def.name {
                        return Some(format!("expected field '{}', found '{}'", def.name, name));
                    }
                    if let Some(e) = self.conformance_error(v, SchemaType::Field(&def.ty)) {
                        return Some(format!("{}: {}", def.name, e));
                    }
                }
                None
            }
            SchemaType::Field(ft) => match (ft, value) {
                (FieldType::Int { lo, hi }, Value::Int(i)) => {
                    (i < lo || i > hi).then(|| format!("{i} outside [{lo}, {hi}]"))
                }
                (FieldType::Bool, Value::Bool(_)) => None,
                (FieldType::Enum { name }, Value::Enum(ix)) => {
                    let n = self.enum_def(name).map_or(0, |e| e.variants.len());
                    (*ix as usize >= n).then(|| format!("variant {ix} out of range for {name}"))
                }
                (FieldType::Grid { width, height, cell }, Value::Grid(g)) => {
                    if g.width() != *width || g.height() != *height {
                        return Some(format!(
                            "grid is {}x{}, expected {}x{}",
                            g.width(),
                            g.height(),
                            width,
                            height
                        ));
                    }
                    let n = self.enum_def(cell).map_or(0, |e| e.variants.len()) as u32;
                    g.cells().iter().any(|&c| c >= n).then(|| format!("grid cell out of range for {cell}"))
                }
                (ft, v) => Some(format!("expected {}, found {}", type_label(ft), v.kind_name())),
            },
        }
    }

    /// All valid values of a record, or `None` when there are more than `limit`.
    pub fn enumerate(&self, rec: &RecordDef, limit: usize) -> Option<Vec<Value>> {
        let mut per_field: Vec<Vec<Value>> = Vec::with_capacity(rec.fields.len());
        let mut total: usize = 1;
        for f in &rec.fields {
            let vals = self.enumerate_field(&f.ty, limit)?;
            total = total.checked_mul(vals.len())?;
            if total > limit {
                return None;
            }
            per_field.push(vals);
        }
        let names = rec.field_names();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; per_field.len()];
        loop {
            let fields = names
                .iter()
                .zip(&idx)
                .zip(&per_field)
                .map(|((n, &i), vals)| (n.clone(), vals[i].clone()))
                .collect();
            out.push(Value::Record(fields));
            // odometer increment, last field fastest
            let mut k = idx.len();
            loop {
                if k == 0 {
                    return Some(out);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < per_field[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    fn enumerate_field(&self, ft: &FieldType, limit: usize) -> Option<Vec<Value>> {
        match ft {
            FieldType::Int { lo, hi } => {
                let n = (hi - lo + 1) as usize;
                (n <= limit).then(|| (*lo..=*hi).map(Value::Int).collect())
            }
            FieldType::Bool => Some(vec![Value::Bool(false), Value::Bool(true)]),
            FieldType::Enum { name } => {
                let n = self.enum_def(name)?.variants.len();
                Some((0..n as u32).map(Value::Enum).collect())
            }
            FieldType::Grid { width, height, cell } => {
                let k = self.enum_def(cell)?.variants.len();
                let cells = width * height;
                let total = (k as f64).powi(cells as i32);
                if total > limit as f64 {
                    return None;
                }
                let total = total as usize;
                let mut out = Vec::with_capacity(total);
                for mut code in 0..total {
                    let mut cs = vec![0u32; cells];
                    for c in cs.iter_mut() {
                        *c = (code % k) as u32;
                        code /= k;
                    }
                    out.push(Value::Grid(Arc::new(Grid::from_cells(*width, *height, cs))));
                }
                Some(out)
            }
        }
    }

    /// Value with every field at its minimum: `lo` for ints, `false`, the
    /// first enum variant, and grids filled with variant 0.
    pub fn default_value(&self, rec: &RecordDef) -> Value {
        let fields = rec
            .fields
            .iter()
            .map(|f| {
                let v = match &f.ty {
                    FieldType::Int { lo, .. } => Value::Int(*lo),
                    FieldType::Bool => Value::Bool(false),
                    FieldType::Enum { .. } => Value::Enum(0),
                    FieldType::Grid { width, height, .. } => Value::Grid(Arc::new(Grid::new(*width, *height, 0))),
                };
                (Arc::from(f.name.as_str()), v)
            })
            .collect();
        Value::Record(fields)
    }

    /// Uniformly random valid value of a type.
    pub fn random_value<R: Rng + ?Sized>(&self, ty: SchemaType<'_>, rng: &mut R) -> Value {
        match ty {
            SchemaType::Record(rec) => Value::Record(
                rec.fields
                    .iter()
                    .map(|f| (Arc::from(f.name.as_str()), self.random_value(SchemaType::Field(&f.ty), rng)))
                    .collect(),
            ),
            SchemaType::Field(ft) => match ft {
                FieldType::Int { lo, hi } => Value::Int(rng.random_range(*lo..=*hi)),
                FieldType::Bool => Value::Bool(rng.random()),
                FieldType::Enum { name } => {
                    let n = self.enum_def(name).map_or(1, |e| e.variants.len()) as u32;
                    Value::Enum(rng.random_range(0..n))
                }
                FieldType::Grid { width, height, cell } => {
                    let n = self.enum_def(cell).map_or(1, |e| e.variants.len()) as u32;
                    let cells = (0..width * height).map(|_| rng.random_range(0..n)).collect();
                    Value::Grid(Arc::new(Grid::from_cells(*width, *height, cells)))
                }
            },
        }
    }

    /// Python-like rendering used in prompts, e.g. `TigerState(tiger_location=0)`.
    pub fn render(&self, value: &Value, ty: SchemaType<'_>) -> String {
        let mut out = String::new();
        self.render_into(&mut out, value, ty);
        out
    }

    fn render_into(&self, out: &mut String, value: &Value, ty: SchemaType<'_>) {
        match (ty, value) {
            (SchemaType::Record(rec), Value::Record(fields)) => {
                out.push_str(&rec.name);
                out.push('(');
                for (i, ((name, v), def)) in fields.iter().zip(&rec.fields).enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(name);
                    out.push('=');
                    self.render_into(out, v, SchemaType::Field(&def.ty));
                }
                out.push(')');
            }
            (SchemaType::Field(FieldType::Enum { name }), Value::Enum(ix)) => {
                out.push_str(&self.variant_name(name, *ix));
            }
            (SchemaType::Field(FieldType::Grid { cell, .. }), Value::Grid(g)) => {
                out.push('[');
                for y in 0..g.height() {
                    if y > 0 {
                        out.push_str(", ");
                    }
                    out.push('[');
                    for x in 0..g.width() {
                        if x > 0 {
                            out.push_str(", ");
                        }
                        out.push_str(&self.variant_name(cell, g.get(x, y)));
                    }
                    out.push(']');
                }
                out.push(']');
            }
            (_, v) => {
                let _ = write!(out, "{v}");
            }
        }
    }

    pub fn variant_name(&self, enum_name: &str, ix: u32) -> String {
        self.enum_def(enum_name)
            .and_then(|e| e.variants.get(ix as usize))
            .cloned()
            .unwrap_or_else(|| format!("{enum_name}({ix})"))
    }

    pub fn action_name(&self, a: usize) -> &str {
        self.actions.get(a).map_or("<invalid>", String::as_str)
    }

    /// Python-like class listing of the schema, shown to the proposer.
    pub fn code_api(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "class {}(enum.IntEnum):", self.actions_type_name());
        for (i, a) in self.actions.iter().enumerate() {
            let _ = writeln!(out, "    {a} = {i}");
        }
        for e in &self.enums {
            let _ = writeln!(out, "\nclass {}(enum.IntEnum):", e.name);
            for (i, v) in e.variants.iter().enumerate() {
                let _ = writeln!(out, "    {v} = {i}");
            }
        }
        for rec in [&self.observation, &self.state] {
            let _ = writeln!(out, "\n@dataclass\nclass {}:", rec.name);
            for f in &rec.fields {
                let ty = match &f.ty {
                    FieldType::Int { lo, hi } => format!("int  # {lo}..={hi}"),
                    FieldType::Bool => "bool".to_string(),
                    FieldType::Enum { name } => name.clone(),
                    FieldType::Grid { width, height, cell } => {
                        format!("Grid[{cell}]  # {width} wide x {height} high, indexed as grid[x, y]")
                    }
                };
                if f.doc.is_empty() {
                    let _ = writeln!(out, "    {}: {}", f.name, ty);
                } else {
                    let sep = if ty.contains('#') { ";" } else { "  #" };
                    let _ = writeln!(out, "    {}: {}{} {}", f.name, ty, sep, f.doc);
                }
            }
        }
        out
    }
}

fn type_label(ft: &FieldType) -> &'static str {
    match ft {
        FieldType::Int { .. } => "int",
        FieldType::Bool => "bool",
        FieldType::Enum { .. } => "enum",
        FieldType::Grid { .. } => "grid",
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;

    pub(crate) fn tiger() -> DomainSchema {
        DomainSchema {
            name: "Tiger".into(),
            description: String::new(),
            goal_description: String::new(),
            enums: vec![EnumDef {
                name: "TigerObs".into(),
                variants: vec!["HEAR_LEFT".into(), "HEAR_RIGHT".into(), "NONE".into()],
            }],
            actions: vec!["OPEN_LEFT".into(), "OPEN_RIGHT".into(), "LISTEN".into()],
            state: RecordDef {
                name: "TigerState".into(),
                fields: vec![FieldDef::new("tiger_location", FieldType::Int { lo: 0, hi: 1 })],
            },
            observation: RecordDef {
                name: "TigerObservation".into(),
                fields: vec![FieldDef::new("obs", FieldType::Enum { name: "TigerObs".into() })],
            },
        }
    }

    #[test]
    fn int_range_is_inclusive() {
        let s = tiger();
        let ty = FieldType::Int { lo: 0, hi: 1 };
        assert!(s.validate(&Value::Int(0), SchemaType::Field(&ty)));
        assert!(s.validate(&Value::Int(1), SchemaType::Field(&ty)));
        assert!(!s.validate(&Value::Int(2), SchemaType::Field(&ty)));
        assert!(!s.validate(&Value::Int(-1), SchemaType::Field(&ty)));
    }

    #[test]
    fn tiger_state_record_validates() {
        let s = tiger();
        let v = Value::record([("tiger_location", Value::Int(1))]);
        assert!(s.validate_state(&v));
        let wrong_name = Value::record([("tiger", Value::Int(1))]);
        assert!(!s.validate_state(&wrong_name));
        assert!(!s.validate_state(&Value::Int(1)));
    }

    #[test]
    fn tiger_enumeration_is_exactly_the_valid_set() {
        let s = tiger();
        let states = s.enumerate(&s.state, 100).unwrap();
        assert_eq!(states.len(), 2);
        assert!(states.iter().all(|v| s.validate_state(v)));
        let obs = s.enumerate(&s.observation, 100).unwrap();
        assert_eq!(obs.len(), 3);
        // anything outside the enumeration is rejected
        for i in -3..5 {
            let v = Value::record([("tiger_location", Value::Int(i))]);
            assert_eq!(s.validate_state(&v), states.contains(&v));
        }
    }

    #[test]
    fn schema_invariants_are_checked() {
        let mut s = tiger();
        assert!(s.check().is_ok());
        s.actions.push("LISTEN".into());
        assert_eq!(s.check(), Err(SchemaError::DuplicateAction("LISTEN".into())));
        let mut s = tiger();
        s.enums[0].variants.clear();
        assert!(matches!(s.check(), Err(SchemaError::EmptyEnum(_))));
        let mut s = tiger();
        s.state.fields[0].ty = FieldType::Int { lo: 2, hi: 1 };
        assert!(matches!(s.check(), Err(SchemaError::EmptyRange { .. })));
    }

    #[test]
    fn random_values_validate() {
        let s = tiger();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let v = s.random_value(SchemaType::Record(&s.state), &mut rng);
            assert!(s.validate_state(&v));
        }
    }

    #[test]
    fn render_uses_variant_names() {
        let s = tiger();
        let o = Value::record([("obs", Value::Enum(0))]);
        assert_eq!(s.render(&o, SchemaType::Record(&s.observation)), "TigerObservation(obs=HEAR_LEFT)");
    }
}
