//! Tree-walking evaluator over the lowered IR.
//!
//! Randomness is routed through a [`Chooser`], which lets the same evaluator
//! serve seeded sampling and exhaustive branch enumeration.

use std::sync::Arc;

use pomdp_core::schema::{FieldType, RecordDef, SchemaType};
use pomdp_core::{Grid, Value};
use rand::Rng;

use crate::ast::{BinOp, CmpOp, ComponentKind};
use crate::compile::{Builtin, Compiled, Dist, Ex, St, TargetIr};
use crate::error::RunError;

/// Source of choices at `sample` sites. `probs` lists the probability of
/// each outcome index; zero entries must never be chosen.
pub trait Chooser {
    /// Returns the chosen outcome index, or `None` to abandon the run.
    fn choose(&mut self, site: &str, probs: &[f64]) -> Option<usize>;
}

/// Draws each choice from a random number generator.
pub struct RngChooser<'a, R: ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> Chooser for RngChooser<'_, R> {
    fn choose(&mut self, _site: &str, probs: &[f64]) -> Option<usize> {
        Some(pick(self.0, probs))
    }
}

/// Inverse-CDF draw that never returns a zero-probability index.
pub(crate) fn pick<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

pub(crate) enum Halt {
    Err(RunError),
    Abort,
}

impl From<RunError> for Halt {
    fn from(e: RunError) -> Self {
        Halt::Err(e)
    }
}

type R<T> = Result<T, Halt>;

enum Flow {
    Normal,
    Return(Value),
}

struct Machine<'a, C: Chooser + ?Sized> {
    prog: &'a Compiled,
    slots: Vec<Option<Value>>,
    chooser: &'a mut C,
    steps: u64,
}

/// Executes `prog` on `inputs`, returning the coerced, schema-checked output.
pub(crate) fn execute<C: Chooser + ?Sized>(
    prog: &Compiled,
    inputs: &[Value],
    chooser: &mut C,
    steps: &mut u64,
) -> R<Value> {
    if inputs.len() != prog.n_params {
        return Err(RunError::Input(format!("expected {} inputs, got {}", prog.n_params, inputs.len())).into());
    }
    let mut slots = vec![None; prog.slot_names.len()];
    for (s, v) in slots.iter_mut().zip(inputs) {
        *s = Some(v.clone());
    }
    let mut m = Machine { prog, slots, chooser, steps: 0 };
    let res = m.block(&prog.body);
    *steps = m.steps;
    let out = match res? {
        Flow::Return(v) => v,
        Flow::Normal => return Err(RunError::NoReturn.into()),
    };
    Ok(finish_output(prog, out)?)
}

fn finish_output(prog: &Compiled, out: Value) -> Result<Value, RunError> {
    let schema = &prog.schema;
    match prog.kind {
        ComponentKind::Reward => Ok(out),
        ComponentKind::Observation => coerce_record(schema, out, &schema.observation),
        ComponentKind::Initial | ComponentKind::Transition => coerce_record(schema, out, &schema.state),
    }
}

/// Applies IntEnum-style coercions (ints into enum/bool fields, bools and
/// integral floats into int fields) and then validates.
fn coerce_record(schema: &pomdp_core::DomainSchema, v: Value, rec: &RecordDef) -> Result<Value, RunError> {
    let Value::Record(mut fields) = v else {
        return Err(RunError::Output(format!("expected {}, found {}", rec.name, v.kind_name())));
    };
    if fields.len() == rec.fields.len() {
        for ((_, fv), def) in fields.iter_mut().zip(&rec.fields) {
            let new = match (&def.ty, &*fv) {
                (FieldType::Enum { .. }, Value::Int(i)) if *i >= 0 && *i <= u32::MAX as i64 => Some(Value::Enum(*i as u32)),
                (FieldType::Int { .. }, Value::Bool(b)) => Some(Value::Int(*b as i64)),
                (FieldType::Int { .. }, Value::Enum(e)) => Some(Value::Int(*e as i64)),
                (FieldType::Int { .. }, Value::Real(r)) if r.fract() == 0.0 && r.abs() < 9.0e15 => {
                    Some(Value::Int(*r as i64))
                }
                (FieldType::Bool, Value::Int(i)) if *i == 0 || *i == 1 => Some(Value::Bool(*i == 1)),
                _ => None,
            };
            if let Some(n) = new {
                *fv = n;
            }
        }
    }
    let v = Value::Record(fields);
    match schema.conformance_error(&v, SchemaType::Record(rec)) {
        None => Ok(v),
        Some(e) => Err(RunError::Output(e)),
    }
}

fn truthy(v: &Value) -> bool {
    match v {
        Value::Bool(b) => *b,
        Value::Int(i) => *i != 0,
        Value::Real(r) => *r != 0.0,
        Value::Enum(e) => *e != 0,
        Value::Grid(_) | Value::Record(_) => true,
    }
}

enum Num {
    I(i64),
    F(f64),
}

fn num(v: &Value, op: &str) -> Result<Num, RunError> {
    Ok(match v {
        Value::Int(i) => Num::I(*i),
        Value::Bool(b) => Num::I(*b as i64),
        Value::Enum(e) => Num::I(*e as i64),
        Value::Real(r) => Num::F(*r),
        other => return Err(RunError::Type(format!("unsupported operand for '{op}': {}", other.kind_name()))),
    })
}

fn as_f64(n: &Num) -> f64 {
    match n {
        Num::I(i) => *i as f64,
        Num::F(f) => *f,
    }
}

fn as_index(v: &Value) -> Result<i64, RunError> {
    match v {
        Value::Int(i) => Ok(*i),
        Value::Bool(b) => Ok(*b as i64),
        Value::Enum(e) => Ok(*e as i64),
        Value::Real(r) if r.fract() == 0.0 => Ok(*r as i64),
        other => Err(RunError::Type(format!("grid index must be an int, found {}", other.kind_name()))),
    }
}

fn overflow() -> RunError {
    RunError::Type("integer overflow".into())
}

fn binop(op: BinOp, a: &Value, b: &Value) -> Result<Value, RunError> {
    let (x, y) = (num(a, op.symbol())?, num(b, op.symbol())?);
    if let (Num::I(x), Num::I(y)) = (&x, &y) {
        let (x, y) = (*x, *y);
        return Ok(match op {
            BinOp::Add => Value::Int(x.checked_add(y).ok_or_else(overflow)?),
            BinOp::Sub => Value::Int(x.checked_sub(y).ok_or_else(overflow)?),
            BinOp::Mul => Value::Int(x.checked_mul(y).ok_or_else(overflow)?),
            BinOp::Div => {
                if y == 0 {
                    return Err(RunError::DivisionByZero);
                }
                Value::Real(x as f64 / y as f64)
            }
            BinOp::FloorDiv => {
                if y == 0 {
                    return Err(RunError::DivisionByZero);
                }
                let q = x.checked_div(y).ok_or_else(overflow)?;
                Value::Int(if x % y != 0 && ((x < 0) != (y < 0)) { q - 1 } else { q })
            }
            BinOp::Mod => {
                if y == 0 {
                    return Err(RunError::DivisionByZero);
                }
                let r = x.checked_rem(y).ok_or_else(overflow)?;
                Value::Int(if r != 0 && ((r < 0) != (y < 0)) { r + y } else { r })
            }
        });
    }
    let (x, y) = (as_f64(&x), as_f64(&y));
    let r = match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div | BinOp::FloorDiv | BinOp::Mod if y == 0.0 => return Err(RunError::DivisionByZero),
        BinOp::Div => x / y,
        BinOp::FloorDiv => (x / y).floor(),
        BinOp::Mod => x - y * (x / y).floor(),
    };
    Ok(Value::Real(r))
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (num(a, "=="), num(b, "==")) {
        (Ok(Num::I(x)), Ok(Num::I(y))) => x == y,
        (Ok(x), Ok(y)) => as_f64(&x) == as_f64(&y),
        _ => a == b,
    }
}

fn compare(op: CmpOp, a: &Value, b: &Value) -> Result<bool, RunError> {
    Ok(match op {
        CmpOp::Eq => values_equal(a, b),
        CmpOp::Ne => !values_equal(a, b),
        _ => {
            let (x, y) = (num(a, op.symbol())?, num(b, op.symbol())?);
            let ord = match (x, y) {
                (Num::I(x), Num::I(y)) => x.partial_cmp(&y),
                (x, y) => as_f64(&x).partial_cmp(&as_f64(&y)),
            };
            let Some(ord) = ord else { return Ok(false) };
            match op {
                CmpOp::Lt => ord.is_lt(),
                CmpOp::Le => ord.is_le(),
                CmpOp::Gt => ord.is_gt(),
                CmpOp::Ge => ord.is_ge(),
                _ => unreachable!(),
            }
        }
    })
}

fn field_ref<'v>(v: &'v Value, name: &str, hint: u16) -> Result<&'v Value, RunError> {
    match v {
        Value::Record(fields) => {
            if let Some((k, fv)) = fields.get(hint as usize) {
                if k.as_ref() == name {
                    return Ok(fv);
                }
            }
            fields
                .iter()
                .find(|(k, _)| k.as_ref() == name)
                .map(|(_, fv)| fv)
                .ok_or_else(|| RunError::Type(format!("record has no field '{name}'")))
        }
        other => Err(RunError::Type(format!("{} value has no field '{name}'", other.kind_name()))),
    }
}

fn field_mut<'v>(v: &'v mut Value, name: &str, hint: u16) -> Result<&'v mut Value, RunError> {
    match v {
        Value::Record(fields) => {
            let idx = match fields.get(hint as usize) {
                Some((k, _)) if k.as_ref() == name => hint as usize,
                _ => fields
                    .iter()
                    .position(|(k, _)| k.as_ref() == name)
                    .ok_or_else(|| RunError::Type(format!("record has no field '{name}'")))?,
            };
            Ok(&mut fields[idx].1)
        }
        other => Err(RunError::Type(format!("{} value has no field '{name}'", other.kind_name()))),
    }
}

fn grid_of(v: &Value) -> Result<&Grid, RunError> {
    v.as_grid().ok_or_else(|| RunError::Type(format!("expected a grid, found {}", v.kind_name())))
}

fn cell_index(g: &Grid, x: i64, y: i64) -> Result<usize, RunError> {
    if !g.in_bounds(x, y) {
        return Err(RunError::IndexOutOfBounds { x, y, width: g.width(), height: g.height() });
    }
    Ok(y as usize * g.width() + x as usize)
}

fn cell_value(v: &Value) -> Result<u32, RunError> {
    match v {
        Value::Enum(e) => Ok(*e),
        Value::Int(i) if *i >= 0 && *i <= u32::MAX as i64 => Ok(*i as u32),
        other => Err(RunError::Type(format!("grid cells hold enum values, found {}", other.kind_name()))),
    }
}

impl<C: Chooser + ?Sized> Machine<'_, C> {
    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.prog.step_bound {
            return Err(RunError::StepLimit(self.prog.step_bound).into());
        }
        Ok(())
    }

    fn block(&mut self, body: &[St]) -> R<Flow> {
        for s in body {
            if let Flow::Return(v) = self.stmt(s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, s: &St) -> R<Flow> {
        self.tick()?;
        match s {
            St::Pass => {}
            St::Return(vals) => {
                if vals.len() == 2 {
                    let r = self.eval(&vals[0])?;
                    let d = self.eval(&vals[1])?;
                    let reward = match num(&r, "reward")? {
                        Num::I(i) => i as f64,
                        Num::F(f) => f,
                    };
                    if !reward.is_finite() {
                        return Err(RunError::Output("reward is not finite".into()).into());
                    }
                    let done = match d {
                        Value::Bool(b) => b,
                        Value::Int(i) if i == 0 || i == 1 => i == 1,
                        other => {
                            return Err(RunError::Output(format!("done must be a bool, found {}", other.kind_name())).into())
                        }
                    };
                    return Ok(Flow::Return(Value::reward_outcome(reward, done)));
                }
                return Ok(Flow::Return(self.eval(&vals[0])?));
            }
            St::Assign(t, op, e) => {
                let v = self.eval(e)?;
                self.assign(t, *op, v)?;
            }
            St::If(branches, orelse) => {
                for (c, body) in branches {
                    if truthy(&self.eval(c)?) {
                        return self.block(body);
                    }
                }
                return self.block(orelse);
            }
            St::For { slot, start, end, body } => {
                for i in *start..*end {
                    self.tick()?;
                    self.slots[*slot as usize] = Some(Value::Int(i));
                    if let Flow::Return(v) = self.block(body)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
        }
        Ok(Flow::Normal)
    }

    fn assign(&mut self, t: &TargetIr, op: Option<BinOp>, v: Value) -> R<()> {
        let index = match &t.index {
            Some((x, y)) => Some((as_index(&self.eval(x)?)?, as_index(&self.eval(y)?)?)),
            None => None,
        };
        let name = &self.prog.slot_names[t.slot as usize];
        let slot = &mut self.slots[t.slot as usize];
        if slot.is_none() && (op.is_some() || !t.fields.is_empty() || index.is_some()) {
            return Err(RunError::Unbound(name.clone()).into());
        }
        if t.fields.is_empty() && index.is_none() {
            let new = match (op, slot.as_ref()) {
                (Some(op), Some(cur)) => binop(op, cur, &v)?,
                _ => v,
            };
            *slot = Some(new);
            return Ok(());
        }
        let mut place = slot.as_mut().unwrap();
        for (f, hint) in &t.fields {
            place = field_mut(place, f, *hint)?;
        }
        match index {
            None => {
                *place = match op {
                    Some(op) => binop(op, place, &v)?,
                    None => v,
                };
            }
            Some((x, y)) => {
                let Value::Grid(g) = place else {
                    return Err(RunError::Type(format!("cannot index a {} value", place.kind_name())).into());
                };
                let i = cell_index(g, x, y)?;
                let new = match op {
                    Some(op) => cell_value(&binop(op, &Value::Enum(g.cells()[i]), &v)?)?,
                    None => cell_value(&v)?,
                };
                let g = Arc::make_mut(g);
                g.set(i % g.width(), i / g.width(), new);
            }
        }
        Ok(())
    }

    /// Borrow-only evaluation for variable and field-chain reads.
    fn place(&self, e: &Ex) -> Option<R<&Value>> {
        match e {
            Ex::Local(s) => Some(
                self.slots[*s as usize]
                    .as_ref()
                    .ok_or_else(|| RunError::Unbound(self.prog.slot_names[*s as usize].clone()).into()),
            ),
            Ex::Field(b, name, hint) if *hint != u16::MAX => {
                let base = self.place(b)?;
                Some(base.and_then(|v| field_ref(v, name, *hint).map_err(Halt::from)))
            }
            _ => None,
        }
    }

    fn eval(&mut self, e: &Ex) -> R<Value> {
        if let Some(p) = self.place(e) {
            return p.cloned();
        }
        Ok(match e {
            Ex::Const(v) => v.clone(),
            Ex::Local(_) => unreachable!(),
            Ex::Field(b, name, hint) => {
                let v = self.eval(b)?;
                match (&v, name.as_ref()) {
                    (Value::Grid(g), "width") => Value::Int(g.width() as i64),
                    (Value::Grid(g), "height") => Value::Int(g.height() as i64),
                    (Value::Enum(x), "value") => Value::Int(*x as i64),
                    _ => field_ref(&v, name, *hint)?.clone(),
                }
            }
            Ex::GridDim(g, w) => {
                let v = self.eval(g)?;
                let g = grid_of(&v)?;
                Value::Int(if *w { g.width() } else { g.height() } as i64)
            }
            Ex::EnumValue(x) => match self.eval(x)? {
                Value::Enum(i) => Value::Int(i as i64),
                other => other,
            },
            Ex::Index(g, x, y) => {
                let xi = as_index(&self.eval(x)?)?;
                let yi = as_index(&self.eval(y)?)?;
                let cell = match self.place(g) {
                    Some(p) => {
                        let g = grid_of(p?)?;
                        g.cells()[cell_index(g, xi, yi)?]
                    }
                    None => {
                        let v = self.eval(g)?;
                        let g = grid_of(&v)?;
                        g.cells()[cell_index(g, xi, yi)?]
                    }
                };
                Value::Enum(cell)
            }
            Ex::Neg(x) => match num(&self.eval(x)?, "-")? {
                Num::I(i) => Value::Int(i.checked_neg().ok_or_else(overflow)?),
                Num::F(f) => Value::Real(-f),
            },
            Ex::Not(x) => Value::Bool(!truthy(&self.eval(x)?)),
            Ex::Bin(op, a, b) => {
                let a = self.eval(a)?;
                let b = self.eval(b)?;
                binop(*op, &a, &b)?
            }
            Ex::Cmp(op, a, b) => {
                let a = self.eval(a)?;
                let b = self.eval(b)?;
                Value::Bool(compare(*op, &a, &b)?)
            }
            Ex::InList(negate, x, items) => {
                let x = self.eval(x)?;
                let mut found = false;
                for it in items {
                    if values_equal(&x, &self.eval(it)?) {
                        found = true;
                        break;
                    }
                }
                Value::Bool(found != *negate)
            }
            Ex::And(a, b) => {
                let a = self.eval(a)?;
                if truthy(&a) {
                    self.eval(b)?
                } else {
                    a
                }
            }
            Ex::Or(a, b) => {
                let a = self.eval(a)?;
                if truthy(&a) {
                    a
                } else {
                    self.eval(b)?
                }
            }
            Ex::IfExp(c, a, b) => {
                if truthy(&self.eval(c)?) {
                    self.eval(a)?
                } else {
                    self.eval(b)?
                }
            }
            Ex::Builtin(b, args) => {
                let vals = args.iter().map(|a| self.eval(a)).collect::<R<Vec<_>>>()?;
                builtin(*b, vals)?
            }
            Ex::MakeRecord(names, es) => {
                let mut fields = Vec::with_capacity(es.len());
                for (n, e) in names.iter().zip(es) {
                    fields.push((n.clone(), self.eval(e)?));
                }
                Value::Record(fields)
            }
            Ex::MakeEnum(n, x) => {
                let i = as_index(&self.eval(x)?)?;
                if i < 0 || i >= *n as i64 {
                    return Err(RunError::Type(format!("{i} is not a valid enum variant index")).into());
                }
                Value::Enum(i as u32)
            }
            Ex::Sample(site, d) => self.sample(*site, d)?,
        })
    }

    fn sample(&mut self, site: u16, d: &Dist) -> R<Value> {
        let name = &self.prog.sites[site as usize];
        let bad = |m: String| Halt::Err(RunError::InvalidDistribution(m));
        match d {
            Dist::Bernoulli(p) => {
                let p = as_f64(&num(&self.eval(p)?, "Bernoulli")?);
                if !(0.0..=1.0).contains(&p) {
                    return Err(bad(format!("Bernoulli probability {p} outside [0, 1]")));
                }
                let k = self.chooser.choose(name, &[1.0 - p, p]).ok_or(Halt::Abort)?;
                Ok(Value::Bool(k == 1))
            }
            Dist::Categorical(ws) => {
                let mut probs = Vec::with_capacity(ws.len());
                for w in ws {
                    let w = as_f64(&num(&self.eval(w)?, "Categorical")?);
                    if !(w.is_finite() && w >= 0.0) {
                        return Err(bad(format!("Categorical weight {w} is negative or not finite")));
                    }
                    probs.push(w);
                }
                let total: f64 = probs.iter().sum();
                if total <= 0.0 {
                    return Err(bad("Categorical weights sum to zero".into()));
                }
                for p in &mut probs {
                    *p /= total;
                }
                let k = self.chooser.choose(name, &probs).ok_or(Halt::Abort)?;
                Ok(Value::Int(k as i64))
            }
            Dist::UniformInt(lo, hi) => {
                let lo = as_index(&self.eval(lo)?)?;
                let hi = as_index(&self.eval(hi)?)?;
                if lo > hi {
                    return Err(bad(format!("UniformInt bounds {lo} > {hi}")));
                }
                let n = (hi - lo + 1) as usize;
                if n > 1_000_000 {
                    return Err(bad(format!("UniformInt range of {n} values is too large")));
                }
                let probs = vec![1.0 / n as f64; n];
                let k = self.chooser.choose(name, &probs).ok_or(Halt::Abort)?;
                Ok(Value::Int(lo + k as i64))
            }
        }
    }
}

fn builtin(b: Builtin, mut vals: Vec<Value>) -> Result<Value, RunError> {
    Ok(match b {
        Builtin::Identity => vals.pop().unwrap(),
        Builtin::Abs => match num(&vals[0], "abs")? {
            Num::I(i) => Value::Int(i.checked_abs().ok_or_else(overflow)?),
            Num::F(f) => Value::Real(f.abs()),
        },
        Builtin::Min | Builtin::Max => {
            let want_max = b == Builtin::Max;
            let mut best = vals[0].clone();
            num(&best, "min/max")?;
            for v in &vals[1..] {
                let better = if want_max { compare(CmpOp::Gt, v, &best)? } else { compare(CmpOp::Lt, v, &best)? };
                if better {
                    best = v.clone();
                }
            }
            best
        }
        Builtin::Int => match num(&vals[0], "int")? {
            Num::I(i) => Value::Int(i),
            Num::F(f) if f.is_finite() && f.abs() < 9.2e18 => Value::Int(f.trunc() as i64),
            Num::F(f) => return Err(RunError::Type(format!("cannot convert {f} to int"))),
        },
        Builtin::Float => Value::Real(as_f64(&num(&vals[0], "float")?)),
        Builtin::Bool => Value::Bool(truthy(&vals[0])),
        Builtin::Pow => {
            let (a, e) = (num(&vals[0], "pow")?, num(&vals[1], "pow")?);
            match (a, e) {
                (Num::I(a), Num::I(e)) if (0..=u32::MAX as i64).contains(&e) => {
                    Value::Int(a.checked_pow(e as u32).ok_or_else(overflow)?)
                }
                (a, e) => {
                    let (a, e) = (as_f64(&a), as_f64(&e));
                    if a == 0.0 && e < 0.0 {
                        return Err(RunError::DivisionByZero);
                    }
                    Value::Real(a.powf(e))
                }
            }
        }
        Builtin::Width => Value::Int(grid_of(&vals[0])?.width() as i64),
        Builtin::Height => Value::Int(grid_of(&vals[0])?.height() as i64),
    })
}
