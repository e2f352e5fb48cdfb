//! Tagged values shared by every model, environment, and dataset.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Row-major grid of enum cells; `(x, y)` addresses column `x` of row `y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    width: usize,
    height: usize,
    cells: Vec<u32>,
}

impl Grid {
    pub fn new(width: usize, height: usize, fill: u32) -> Self {
        Self { width, height, cells: vec![fill; width * height] }
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<u32>) -> Self {
        assert_eq!(cells.len(), width * height, "grid cell count mismatch");
        Self { width, height, cells }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u32) {
        self.cells[y * self.width + x] = v;
    }
}

/// A discrete value. `Real` only appears in reward outcomes and inside
/// program evaluation; schema fields are strictly discrete.
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    Enum(u32),
    Grid(Arc<Grid>),
    Record(Vec<(Arc<str>, Value)>),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Real(a), Value::Real(b)) => a.to_bits() == b.to_bits() || a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Enum(a), Value::Enum(b)) => a == b,
            (Value::Grid(a), Value::Grid(b)) => a == b,
            (Value::Record(a), Value::Record(b)) => a == b,
            _ => false,
        }
    }
}

impl Value {
    pub fn record<'a>(fields: impl IntoIterator<Item = (&'a str, Value)>) -> Value {
        Value::Record(fields.into_iter().map(|(k, v)| (Arc::from(k), v)).collect())
    }

    /// Reward outcome record `{reward, done}` produced by reward programs.
    pub fn reward_outcome(reward: f64, done: bool) -> Value {
        Value::record([("reward", Value::Real(reward)), ("done", Value::Bool(done))])
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Real(_) => "float",
            Value::Bool(_) => "bool",
            Value::Enum(_) => "enum",
            Value::Grid(_) => "grid",
            Value::Record(_) => "record",
        }
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Record(fields) => fields.iter().find(|(k, _)| k.as_ref() == name).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn field_mut(&mut self, name: &str) -> Option<&mut Value> {
        match self {
            Value::Record(fields) => fields.iter_mut().find(|(k, _)| k.as_ref() == name).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(r) => Some(*r),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_enum(&self) -> Option<u32> {
        match self {
            Value::Enum(e) => Some(*e),
            _ => None,
        }
    }

    pub fn as_grid(&self) -> Option<&Grid> {
        match self {
            Value::Grid(g) => Some(g),
            _ => None,
        }
    }

    /// Splits a reward outcome record into `(reward, done)`.
    pub fn as_reward_outcome(&self) -> Option<(f64, bool)> {
        Some((self.field("reward")?.as_real()?, self.field("done")?.as_bool()?))
    }

    /// Stable, self-describing byte encoding. Equal values give equal bytes
    /// and distinct values give distinct bytes; see [`decode`](Self::decode).
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32);
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Value::Int(i) => {
                out.push(TAG_INT);
                out.extend_from_slice(&i.to_le_bytes());
            }
            Value::Real(r) => {
                out.push(TAG_REAL);
                // -0.0 and 0.0 compare equal, so they must encode equally
                let r = if *r == 0.0 { 0.0 } else { *r };
                out.extend_from_slice(&r.to_bits().to_le_bytes());
            }
            Value::Bool(b) => {
                out.push(TAG_BOOL);
                out.push(u8::from(*b));
            }
            Value::Enum(e) => {
                out.push(TAG_ENUM);
                out.extend_from_slice(&e.to_le_bytes());
            }
            Value::Grid(g) => {
                out.push(TAG_GRID);
                out.extend_from_slice(&(g.width as u32).to_le_bytes());
                out.extend_from_slice(&(g.height as u32).to_le_bytes());
                for c in &g.cells {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
            Value::Record(fields) => {
                out.push(TAG_RECORD);
                out.extend_from_slice(&(fields.len() as u32).to_le_bytes());
                for (k, v) in fields {
                    out.extend_from_slice(&(k.len() as u32).to_le_bytes());
                    out.extend_from_slice(k.as_bytes());
                    v.encode_into(out);
                }
            }
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Value, DecodeError> {
        let mut r = Reader { bytes, pos: 0 };
        let v = r.value()?;
        if r.pos != bytes.len() {
            return Err(DecodeError::Trailing(bytes.len() - r.pos));
        }
        Ok(v)
    }
}

const TAG_INT: u8 = 1;
const TAG_REAL: u8 = 2;
const TAG_BOOL: u8 = 3;
const TAG_ENUM: u8 = 4;
const TAG_GRID: u8 = 5;
const TAG_RECORD: u8 = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unexpected end of input")]
    Eof,
    #[error("unknown tag {0}")]
    Tag(u8),
    #[error("invalid utf-8 in field name")]
    Utf8,
    #[error("{0} trailing bytes")]
    Trailing(usize),
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], DecodeError> {
        let end = self.pos.checked_add(n).ok_or(DecodeError::Eof)?;
        let s = self.bytes.get(self.pos..end).ok_or(DecodeError::Eof)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn value(&mut self) -> Result<Value, DecodeError> {
        let tag = self.take(1)?[0];
        Ok(match tag {
            TAG_INT => Value::Int(self.u64()? as i64),
            TAG_REAL => Value::Real(f64::from_bits(self.u64()?)),
            TAG_BOOL => Value::Bool(self.take(1)?[0] != 0),
            TAG_ENUM => Value::Enum(self.u32()?),
            TAG_GRID => {
                let w = self.u32()? as usize;
                let h = self.u32()? as usize;
                let n = w.checked_mul(h).ok_or(DecodeError::Eof)?;
                if n.saturating_mul(4) > self.bytes.len() - self.pos {
                    return Err(DecodeError::Eof);
                }
                let cells = (0..n).map(|_| self.u32()).collect::<Result<Vec<_>, _>>()?;
                Value::Grid(Arc::new(Grid::from_cells(w, h, cells)))
            }
            TAG_RECORD => {
                let n = self.u32()? as usize;
                let mut fields = Vec::with_capacity(n.min(64));
                for _ in 0..n {
                    let len = self.u32()? as usize;
                    let name = std::str::from_utf8(self.take(len)?).map_err(|_| DecodeError::Utf8)?;
                    let name: Arc<str> = Arc::from(name);
                    fields.push((name, self.value()?));
                }
                Value::Record(fields)
            }
            t => return Err(DecodeError::Tag(t)),
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r:?}"),
            Value::Bool(b) => write!(f, "{}", if *b { "True" } else { "False" }),
            Value::Enum(e) => write!(f, "#{e}"),
            Value::Grid(g) => write!(f, "<grid {}x{}>", g.width, g.height),
            Value::Record(fields) => {
                write!(f, "(")?;
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k}={v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{DomainSchema, EnumDef, FieldDef, FieldType, RecordDef, SchemaType};
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn grid_schema() -> DomainSchema {
        DomainSchema {
            name: "G".into(),
            description: String::new(),
            goal_description: String::new(),
            enums: vec![
                EnumDef { name: "Cell".into(), variants: vec!["EMPTY".into(), "WALL".into(), "GOAL".into()] },
                EnumDef { name: "Dir".into(), variants: vec!["N".into(), "E".into(), "S".into(), "W".into()] },
            ],
            actions: vec!["A".into()],
            state: RecordDef {
                name: "GState".into(),
                fields: vec![
                    FieldDef::new("x", FieldType::Int { lo: -2, hi: 7 }),
                    FieldDef::new("dir", FieldType::Enum { name: "Dir".into() }),
                    FieldDef::new("carrying", FieldType::Bool),
                    FieldDef::new("grid", FieldType::Grid { width: 4, height: 3, cell: "Cell".into() }),
                ],
            },
            observation: RecordDef {
                name: "GObs".into(),
                fields: vec![FieldDef::new("dir", FieldType::Enum { name: "Dir".into() })],
            },
        }
    }

    #[test]
    fn encoding_is_injective_on_tiger_states_and_observations() {
        let s = crate::schema::tests::tiger();
        for rec in [&s.state, &s.observation] {
            let all = s.enumerate(rec, 10).unwrap();
            let encs: std::collections::HashSet<_> = all.iter().map(Value::encode).collect();
            assert_eq!(encs.len(), all.len());
        }
    }

    #[test]
    fn negative_zero_encodes_like_zero() {
        assert_eq!(Value::Real(-0.0).encode(), Value::Real(0.0).encode());
    }

    #[test]
    fn decode_rejects_garbage() {
        assert_eq!(Value::decode(&[9]), Err(DecodeError::Tag(9)));
        assert_eq!(Value::decode(&[TAG_INT, 1, 2]), Err(DecodeError::Eof));
        let mut b = Value::Bool(true).encode();
        b.push(0);
        assert_eq!(Value::decode(&b), Err(DecodeError::Trailing(1)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn encode_round_trips_random_states(seed in any::<u64>()) {
            let s = grid_schema();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let v = s.random_value(SchemaType::Record(&s.state), &mut rng);
            let bytes = v.encode();
            prop_assert_eq!(&bytes, &v.clone().encode());
            prop_assert_eq!(Value::decode(&bytes).unwrap(), v);
        }

        #[test]
        fn distinct_values_encode_distinctly(a in any::<u64>(), b in any::<u64>()) {
            let s = grid_schema();
            let va = s.random_value(SchemaType::Record(&s.state), &mut rand_chacha::ChaCha8Rng::seed_from_u64(a));
            let vb = s.random_value(SchemaType::Record(&s.state), &mut rand_chacha::ChaCha8Rng::seed_from_u64(b));
            prop_assert_eq!(va == vb, va.encode() == vb.encode());
        }
    }
}
