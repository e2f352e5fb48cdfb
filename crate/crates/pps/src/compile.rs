//! Name resolution, light static typing and lowering to a slot-based IR.

use std::collections::HashMap;
use std::sync::Arc;

use pomdp_core::schema::{DomainSchema, FieldType, RecordKind};
use pomdp_core::Value;

use crate::ast::{BinOp, CmpOp, ComponentKind, Expr, FunctionDef, Stmt, Target, UnOp};
use crate::error::ParseError;

/// Static type. `Unknown` defers all checks to run time.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Ty {
    Int,
    Real,
    Bool,
    Enum(usize),
    Grid { cell: usize, width: usize, height: usize },
    Record(RecordKind),
    Unknown,
}

impl Ty {
    fn label(&self, schema: &DomainSchema) -> String {
        match self {
            Ty::Int => "int".into(),
            Ty::Real => "float".into(),
            Ty::Bool => "bool".into(),
            Ty::Enum(e) => schema.enums[*e].name.clone(),
            Ty::Grid { .. } => "grid".into(),
            Ty::Record(k) => schema.record(*k).name.clone(),
            Ty::Unknown => "unknown".into(),
        }
    }

    fn numeric(&self) -> bool {
        matches!(self, Ty::Int | Ty::Real | Ty::Bool | Ty::Enum(_) | Ty::Unknown)
    }

    fn join(&self, other: &Ty) -> Ty {
        if self == other {
            return self.clone();
        }
        match (self, other) {
            (Ty::Int | Ty::Bool | Ty::Enum(_), Ty::Int | Ty::Bool | Ty::Enum(_)) => Ty::Int,
            (Ty::Real, t) | (t, Ty::Real) if t.numeric() && *t != Ty::Unknown => Ty::Real,
            _ => Ty::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Builtin {
    Abs,
    Min,
    Max,
    Int,
    Float,
    Bool,
    Pow,
    Width,
    Height,
    Identity,
}

#[derive(Debug, Clone)]
pub(crate) enum Dist {
    Bernoulli(Box<Ex>),
    Categorical(Vec<Ex>),
    UniformInt(Box<Ex>, Box<Ex>),
}

#[derive(Debug, Clone)]
pub(crate) enum Ex {
    Const(Value),
    Local(u16),
    Field(Box<Ex>, Arc<str>, u16),
    GridDim(Box<Ex>, bool),
    EnumValue(Box<Ex>),
    Index(Box<Ex>, Box<Ex>, Box<Ex>),
    Neg(Box<Ex>),
    Not(Box<Ex>),
    Bin(BinOp, Box<Ex>, Box<Ex>),
    Cmp(CmpOp, Box<Ex>, Box<Ex>),
    InList(bool, Box<Ex>, Vec<Ex>),
    And(Box<Ex>, Box<Ex>),
    Or(Box<Ex>, Box<Ex>),
    IfExp(Box<Ex>, Box<Ex>, Box<Ex>),
    Builtin(Builtin, Vec<Ex>),
    MakeRecord(Arc<[Arc<str>]>, Vec<Ex>),
    MakeEnum(u32, Box<Ex>),
    Sample(u16, Dist),
}

#[derive(Debug, Clone)]
pub(crate) struct TargetIr {
    pub slot: u16,
    pub fields: Vec<(Arc<str>, u16)>,
    pub index: Option<(Ex, Ex)>,
}

#[derive(Debug, Clone)]
pub(crate) enum St {
    Assign(TargetIr, Option<BinOp>, Ex),
    If(Vec<(Ex, Vec<St>)>, Vec<St>),
    For { slot: u16, start: i64, end: i64, body: Vec<St> },
    Return(Vec<Ex>),
    Pass,
}

/// A checked, lowered program ready for execution.
#[derive(Debug)]
pub struct Compiled {
    pub(crate) body: Vec<St>,
    pub(crate) slot_names: Vec<String>,
    pub(crate) n_params: usize,
    pub(crate) kind: ComponentKind,
    pub(crate) step_bound: u64,
    /// Site name of every `sample` call, in source order.
    pub(crate) sites: Vec<String>,
    pub(crate) schema: Arc<DomainSchema>,
}

impl Compiled {
    pub fn step_bound(&self) -> u64 {
        self.step_bound
    }
}

pub(crate) fn param_types(kind: ComponentKind) -> Vec<Ty> {
    let s = Ty::Record(RecordKind::State);
    match kind {
        ComponentKind::Initial => vec![s],
        ComponentKind::Transition => vec![s, Ty::Int],
        ComponentKind::Observation => vec![s, Ty::Int, Ty::Record(RecordKind::Observation)],
        ComponentKind::Reward => vec![s.clone(), Ty::Int, s],
    }
}

pub(crate) fn field_ty(schema: &DomainSchema, ft: &FieldType) -> Ty {
    match ft {
        FieldType::Int { .. } => Ty::Int,
        FieldType::Bool => Ty::Bool,
        FieldType::Enum { name } => schema.enum_index(name).map_or(Ty::Unknown, Ty::Enum),
        FieldType::Grid { width, height, cell } => schema
            .enum_index(cell)
            .map_or(Ty::Unknown, |c| Ty::Grid { cell: c, width: *width, height: *height }),
    }
}

const LOOP_LIMIT: i64 = 10_000;

struct Compiler<'a> {
    schema: &'a DomainSchema,
    fname: &'a str,
    n_params: usize,
    slots: HashMap<String, u16>,
    slot_names: Vec<String>,
    types: Vec<Ty>,
    sites: Vec<String>,
}

pub(crate) fn compile(
    f: &FunctionDef,
    kind: ComponentKind,
    schema: Arc<DomainSchema>,
) -> Result<Compiled, ParseError> {
    if f.name != kind.func_name() {
        return Err(ParseError::ty(format!("expected a function named '{}', found '{}'", kind.func_name(), f.name)));
    }
    let ptys = param_types(kind);
    if f.params.len() != ptys.len() {
        return Err(ParseError::ty(format!(
            "'{}' takes {} parameters ({}), found {}",
            kind.func_name(),
            ptys.len(),
            kind.param_names().join(", "),
            f.params.len()
        )));
    }
    let mut c = Compiler {
        schema: &schema,
        fname: &f.name,
        n_params: f.params.len(),
        slots: HashMap::new(),
        slot_names: Vec::new(),
        types: Vec::new(),
        sites: Vec::new(),
    };
    for (p, t) in f.params.iter().zip(ptys) {
        if c.slots.contains_key(p) {
            return Err(ParseError::ty(format!("duplicate parameter '{p}'")));
        }
        c.declare(p, t);
    }
    collect_assigned(&f.body, &mut |name| {
        if !c.slots.contains_key(name) {
            c.declare(name, Ty::Unknown);
        }
    });
    // assigned locals start untyped; their types are learned in program order
    let body = c.block(&f.body)?;
    let step_bound = block_bound(&body);
    Ok(Compiled {
        body,
        slot_names: c.slot_names,
        n_params: f.params.len(),
        kind,
        step_bound,
        sites: c.sites,
        schema: schema.clone(),
    })
}

fn collect_assigned(body: &[Stmt], add: &mut impl FnMut(&str)) {
    for s in body {
        match s {
            Stmt::Assign { target, .. } | Stmt::AugAssign { target, .. } => {
                if target.fields.is_empty() && target.index.is_none() {
                    add(&target.var)
                }
            }
            Stmt::If { branches, orelse } => {
                for (_, b) in branches {
                    collect_assigned(b, add);
                }
                collect_assigned(orelse, add);
            }
            Stmt::For { var, body, .. } => {
                add(var);
                collect_assigned(body, add);
            }
            Stmt::Return(_) | Stmt::Pass => {}
        }
    }
}

fn block_bound(body: &[St]) -> u64 {
    body.iter().map(stmt_bound).fold(0u64, u64::saturating_add)
}

fn stmt_bound(s: &St) -> u64 {
    match s {
        St::If(branches, orelse) => {
            let inner = branches.iter().map(|(_, b)| block_bound(b)).chain([block_bound(orelse)]).max().unwrap_or(0);
            1 + inner
        }
        St::For { start, end, body, .. } => {
            let n = (end - start).max(0) as u64;
            1u64.saturating_add(n.saturating_mul(block_bound(body).saturating_add(1)))
        }
        _ => 1,
    }
}

fn enum_name_of_dist(func: &str) -> Option<&'static str> {
    let last = func.rsplit('.').next().unwrap_or(func);
    let prefix_ok = !func.contains('.')
        || func.starts_with("dist.")
        || func.starts_with("pyro.distributions.")
        || func.starts_with("distributions.");
    if !prefix_ok {
        return None;
    }
    match last {
        "Bernoulli" => Some("Bernoulli"),
        "Categorical" => Some("Categorical"),
        "UniformInt" => Some("UniformInt"),
        _ => None,
    }
}

impl<'a> Compiler<'a> {
    fn declare(&mut self, name: &str, ty: Ty) -> u16 {
        let slot = self.slot_names.len() as u16;
        self.slots.insert(name.to_string(), slot);
        self.slot_names.push(name.to_string());
        self.types.push(ty);
        slot
    }

    fn block(&mut self, body: &[Stmt]) -> Result<Vec<St>, ParseError> {
        body.iter().map(|s| self.stmt(s)).collect()
    }

    fn stmt(&mut self, s: &Stmt) -> Result<St, ParseError> {
        Ok(match s {
            Stmt::Pass => St::Pass,
            Stmt::Return(vals) => {
                let want = if self.fname == ComponentKind::Reward.func_name() { 2 } else { 1 };
                if vals.len() != want {
                    return Err(ParseError::ty(if want == 2 {
                        "reward_func must return two values: reward, done".to_string()
                    } else {
                        format!("{} must return exactly one value", self.fname)
                    }));
                }
                St::Return(vals.iter().map(|v| self.expr(v).map(|(e, _)| e)).collect::<Result<_, _>>()?)
            }
            Stmt::Assign { target, value } => {
                let (v, vt) = self.expr(value)?;
                let t = self.target(target, Some(&vt))?;
                St::Assign(t, None, v)
            }
            Stmt::AugAssign { target, op, value } => {
                let (v, vt) = self.expr(value)?;
                if !vt.numeric() {
                    return Err(ParseError::ty(format!(
                        "unsupported operand for '{}=': {}",
                        op.symbol(),
                        vt.label(self.schema)
                    )));
                }
                let t = self.target(target, None)?;
                St::Assign(t, Some(*op), v)
            }
            Stmt::If { branches, orelse } => {
                let mut bs = Vec::with_capacity(branches.len());
                for (cond, body) in branches {
                    let (c, _) = self.expr(cond)?;
                    bs.push((c, self.block(body)?));
                }
                St::If(bs, self.block(orelse)?)
            }
            Stmt::For { var, start, end, body } => {
                let start_v = match start {
                    Some(e) => self.const_int(e)?,
                    None => 0,
                };
                let end_v = self.const_int(end)?;
                if end_v - start_v > LOOP_LIMIT {
                    return Err(ParseError::restriction(format!("loop with more than {LOOP_LIMIT} iterations"), 0));
                }
                let slot = self.slots[var];
                self.types[slot as usize] = Ty::Int;
                St::For { slot, start: start_v, end: end_v, body: self.block(body)? }
            }
        })
    }

    fn target(&mut self, t: &Target, assigned: Option<&Ty>) -> Result<TargetIr, ParseError> {
        let slot = *self.slots.get(&t.var).ok_or_else(|| ParseError::ty(format!("unknown name '{}'", t.var)))?;
        if t.var == self.fname {
            return Err(ParseError::restriction("recursion", 0));
        }
        let mut ty = self.types[slot as usize].clone();
        let mut fields = Vec::new();
        for f in &t.fields {
            let (idx, fty) = self.field_of(&ty, f)?;
            fields.push((Arc::from(f.as_str()), idx));
            ty = fty;
        }
        let index = match &t.index {
            Some((x, y)) => {
                if !matches!(ty, Ty::Grid { .. } | Ty::Unknown) {
                    return Err(ParseError::ty(format!("cannot index a {} value", ty.label(self.schema))));
                }
                Some((self.expr(x)?.0, self.expr(y)?.0))
            }
            None => None,
        };
        if fields.is_empty() && index.is_none() {
            if let Some(vt) = assigned {
                let cur = &self.types[slot as usize];
                // first typed assignment fixes the type; later conflicts widen it
                let first = *cur == Ty::Unknown && !self.is_param(slot);
                self.types[slot as usize] = if first { vt.clone() } else { cur.join(vt) };
            }
        }
        Ok(TargetIr { slot, fields, index })
    }

    fn is_param(&self, slot: u16) -> bool {
        (slot as usize) < self.n_params
    }

    /// Resolves `.field` on a value of static type `ty`.
    fn field_of(&self, ty: &Ty, f: &str) -> Result<(u16, Ty), ParseError> {
        match ty {
            Ty::Record(k) => {
                let rec = self.schema.record(*k);
                let idx = rec.fields.iter().position(|fd| fd.name == f).ok_or_else(|| {
                    ParseError::ty(format!(
                        "unknown field '{f}' on {} (fields: {})",
                        rec.name,
                        rec.fields.iter().map(|fd| fd.name.as_str()).collect::<Vec<_>>().join(", ")
                    ))
                })?;
                Ok((idx as u16, field_ty(self.schema, &rec.fields[idx].ty)))
            }
            Ty::Unknown => Ok((0, Ty::Unknown)),
            other => Err(ParseError::ty(format!("{} value has no field '{f}'", other.label(self.schema)))),
        }
    }

    fn const_int(&mut self, e: &Expr) -> Result<i64, ParseError> {
        let bad = || ParseError::restriction("non-constant loop bound", 0);
        Ok(match e {
            Expr::Int(i) => *i,
            Expr::Unary(UnOp::Neg, x) => -self.const_int(x)?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (self.const_int(a)?, self.const_int(b)?);
                match op {
                    BinOp::Add => a.checked_add(b).ok_or_else(bad)?,
                    BinOp::Sub => a.checked_sub(b).ok_or_else(bad)?,
                    BinOp::Mul => a.checked_mul(b).ok_or_else(bad)?,
                    BinOp::FloorDiv if b != 0 => a.div_euclid(b),
                    BinOp::Mod if b != 0 => a.rem_euclid(b),
                    _ => return Err(bad()),
                }
            }
            Expr::Call { func, args, kwargs } if kwargs.is_empty() => match (func.as_str(), args.as_slice()) {
                ("width" | "height", [g]) => self.grid_dim(g, func == "width")?.ok_or_else(bad)?,
                ("min", [a, b]) => self.const_int(a)?.min(self.const_int(b)?),
                ("max", [a, b]) => self.const_int(a)?.max(self.const_int(b)?),
                ("len", _) => return Err(ParseError::ty("len() is not supported; use width(grid) or height(grid)")),
                _ => return Err(bad()),
            },
            Expr::Attr(g, f) if f == "width" || f == "height" => self.grid_dim(g, f == "width")?.ok_or_else(bad)?,
            Expr::Name(n) => match self.resolve_name(n) {
                Ok((Ex::Const(Value::Int(i)), _)) => i,
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        })
    }

    fn grid_dim(&mut self, g: &Expr, width: bool) -> Result<Option<i64>, ParseError> {
        let (_, t) = self.expr(g)?;
        Ok(match t {
            Ty::Grid { width: w, height: h, .. } => Some(if width { w } else { h } as i64),
            _ => None,
        })
    }

    fn resolve_name(&self, n: &str) -> Result<(Ex, Ty), ParseError> {
        if let Some(&slot) = self.slots.get(n) {
            return Ok((Ex::Local(slot), self.types[slot as usize].clone()));
        }
        let mut hits: Vec<(usize, usize)> = Vec::new();
        for (ei, e) in self.schema.enums.iter().enumerate() {
            if let Some(vi) = e.variants.iter().position(|v| v == n) {
                hits.push((ei, vi));
            }
        }
        let action = self.schema.action_index(n);
        match (hits.as_slice(), action) {
            ([(ei, vi)], None) => Ok((Ex::Const(Value::Enum(*vi as u32)), Ty::Enum(*ei))),
            ([], Some(a)) => Ok((Ex::Const(Value::Int(a as i64)), Ty::Int)),
            ([], None) => {
                if n == self.fname {
                    Err(ParseError::restriction("recursion", 0))
                } else {
                    Err(ParseError::ty(format!("unknown name '{n}'")))
                }
            }
            _ => {
                let mut owners: Vec<String> = hits.iter().map(|(ei, _)| self.schema.enums[*ei].name.clone()).collect();
                if action.is_some() {
                    owners.push(self.schema.actions_type_name());
                }
                Err(ParseError::ty(format!(
                    "ambiguous name '{n}' (defined in {}); qualify it, e.g. {}.{n}",
                    owners.join(" and "),
                    owners[0]
                )))
            }
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<(Ex, Ty), ParseError> {
        Ok(match e {
            Expr::Int(i) => (Ex::Const(Value::Int(*i)), Ty::Int),
            Expr::Real(r) => (Ex::Const(Value::Real(*r)), Ty::Real),
            Expr::Bool(b) => (Ex::Const(Value::Bool(*b)), Ty::Bool),
            Expr::Str(_) => return Err(ParseError::ty("string values are only allowed as sample site names")),
            Expr::Name(n) => self.resolve_name(n)?,
            Expr::List(_) => {
                return Err(ParseError::ty("lists are only allowed as Categorical weights or on the right of 'in'"))
            }
            Expr::Attr(base, f) => return self.attr(base, f),
            Expr::Index(g, x, y) => {
                let (ge, gt) = self.expr(g)?;
                let out = match gt {
                    Ty::Grid { cell, .. } => Ty::Enum(cell),
                    Ty::Unknown => Ty::Unknown,
                    other => return Err(ParseError::ty(format!("cannot index a {} value", other.label(self.schema)))),
                };
                let (xe, _) = self.expr(x)?;
                let (ye, _) = self.expr(y)?;
                (Ex::Index(Box::new(ge), Box::new(xe), Box::new(ye)), out)
            }
            Expr::Unary(UnOp::Not, x) => (Ex::Not(Box::new(self.expr(x)?.0)), Ty::Bool),
            Expr::Unary(UnOp::Neg, x) => {
                let (xe, xt) = self.expr(x)?;
                self.need_numeric(&xt, "-")?;
                let t = if xt == Ty::Real { Ty::Real } else if xt == Ty::Unknown { Ty::Unknown } else { Ty::Int };
                (Ex::Neg(Box::new(xe)), t)
            }
            Expr::Binary(op, a, b) => {
                let (ae, at) = self.expr(a)?;
                let (be, bt) = self.expr(b)?;
                self.need_numeric(&at, op.symbol())?;
                self.need_numeric(&bt, op.symbol())?;
                let t = if at == Ty::Unknown || bt == Ty::Unknown {
                    Ty::Unknown
                } else if *op == BinOp::Div || at == Ty::Real || bt == Ty::Real {
                    Ty::Real
                } else {
                    Ty::Int
                };
                (Ex::Bin(*op, Box::new(ae), Box::new(be)), t)
            }
            Expr::Compare(op @ (CmpOp::In | CmpOp::NotIn), a, b) => {
                let (ae, _) = self.expr(a)?;
                let Expr::List(items) = b.as_ref() else {
                    return Err(ParseError::ty("'in' is only supported with a list literal on the right"));
                };
                let items = items.iter().map(|i| self.expr(i).map(|(e, _)| e)).collect::<Result<_, _>>()?;
                (Ex::InList(*op == CmpOp::NotIn, Box::new(ae), items), Ty::Bool)
            }
            Expr::Compare(op, a, b) => {
                let (ae, _) = self.expr(a)?;
                let (be, _) = self.expr(b)?;
                (Ex::Cmp(*op, Box::new(ae), Box::new(be)), Ty::Bool)
            }
            Expr::And(a, b) => {
                let (ae, at) = self.expr(a)?;
                let (be, bt) = self.expr(b)?;
                (Ex::And(Box::new(ae), Box::new(be)), at.join(&bt))
            }
            Expr::Or(a, b) => {
                let (ae, at) = self.expr(a)?;
                let (be, bt) = self.expr(b)?;
                (Ex::Or(Box::new(ae), Box::new(be)), at.join(&bt))
            }
            Expr::IfExp { body, cond, orelse } => {
                let (be, bt) = self.expr(body)?;
                let (ce, _) = self.expr(cond)?;
                let (oe, ot) = self.expr(orelse)?;
                (Ex::IfExp(Box::new(ce), Box::new(be), Box::new(oe)), bt.join(&ot))
            }
            Expr::Call { func, args, kwargs } => self.call(func, args, kwargs)?,
        })
    }

    fn need_numeric(&self, t: &Ty, op: &str) -> Result<(), ParseError> {
        if t.numeric() {
            Ok(())
        } else {
            Err(ParseError::ty(format!("unsupported operand for '{op}': {}", t.label(self.schema))))
        }
    }

    fn attr(&mut self, base: &Expr, f: &str) -> Result<(Ex, Ty), ParseError> {
        // qualified enum constants: `Enum.VARIANT`, `<Domain>Actions.NAME`
        if let Expr::Name(n) = base {
            if !self.slots.contains_key(n) {
                if let Some(ei) = self.schema.enum_index(n) {
                    let vi = self.schema.enums[ei]
                        .variants
                        .iter()
                        .position(|v| v == f)
                        .ok_or_else(|| ParseError::ty(format!("enum {n} has no variant '{f}'")))?;
                    return Ok((Ex::Const(Value::Enum(vi as u32)), Ty::Enum(ei)));
                }
                if *n == self.schema.actions_type_name() {
                    let a = self
                        .schema
                        .action_index(f)
                        .ok_or_else(|| ParseError::ty(format!("{n} has no action '{f}'")))?;
                    return Ok((Ex::Const(Value::Int(a as i64)), Ty::Int));
                }
            }
        }
        let (be, bt) = self.expr(base)?;
        match (&bt, f) {
            (Ty::Grid { .. }, "width" | "height") => return Ok((Ex::GridDim(Box::new(be), f == "width"), Ty::Int)),
            (Ty::Enum(_), "value") => return Ok((Ex::EnumValue(Box::new(be)), Ty::Int)),
            (Ty::Unknown, "width" | "height" | "value") => {
                // decided at run time: grid dimension, enum value, or record field
                return Ok((Ex::Field(Box::new(be), Arc::from(f), u16::MAX), Ty::Unknown));
            }
            _ => {}
        }
        let (idx, t) = self.field_of(&bt, f)?;
        Ok((Ex::Field(Box::new(be), Arc::from(f), idx), t))
    }

    fn call(&mut self, func: &str, args: &[Expr], kwargs: &[(String, Expr)]) -> Result<(Ex, Ty), ParseError> {
        if func == self.fname {
            return Err(ParseError::restriction("recursion", 0));
        }
        if func == "sample" || func == "pyro.sample" {
            return self.sample(args, kwargs);
        }
        if enum_name_of_dist(func).is_some() {
            return Err(ParseError::ty(format!("distribution {func}(...) may only appear directly inside sample(...)")));
        }
        // record constructors
        for kind in [RecordKind::State, RecordKind::Observation] {
            let rec = self.schema.record(kind);
            if rec.name == func {
                return self.make_record(kind, args, kwargs);
            }
        }
        if !kwargs.is_empty() {
            return Err(ParseError::ty(format!("{func}() does not take keyword arguments")));
        }
        // enum constructors: `TigerObs(1)`
        if let Some(ei) = self.schema.enum_index(func) {
            let [a] = args else {
                return Err(ParseError::ty(format!("{func}() takes exactly one argument")));
            };
            let (ae, _) = self.expr(a)?;
            let n = self.schema.enums[ei].variants.len() as u32;
            return Ok((Ex::MakeEnum(n, Box::new(ae)), Ty::Enum(ei)));
        }
        let (b, arity): (Builtin, std::ops::RangeInclusive<usize>) = match func {
            "abs" => (Builtin::Abs, 1..=1),
            "min" => (Builtin::Min, 2..=16),
            "max" => (Builtin::Max, 2..=16),
            "int" => (Builtin::Int, 1..=1),
            "float" => (Builtin::Float, 1..=1),
            "bool" => (Builtin::Bool, 1..=1),
            "pow" => (Builtin::Pow, 2..=2),
            "width" => (Builtin::Width, 1..=1),
            "height" => (Builtin::Height, 1..=1),
            "copy" | "deepcopy" | "copy.copy" | "copy.deepcopy" | "torch.tensor" => (Builtin::Identity, 1..=1),
            f if f.ends_with(".copy") && self.slots.contains_key(f.split('.').next().unwrap_or("")) => {
                // `x.copy()` / `x.grid.copy()`: values already have copy semantics
                let base = &f[..f.len() - ".copy".len()];
                if !args.is_empty() {
                    return Err(ParseError::ty("copy() takes no arguments"));
                }
                let mut e = Expr::Name(base.split('.').next().unwrap().to_string());
                for part in base.split('.').skip(1) {
                    e = Expr::Attr(Box::new(e), part.to_string());
                }
                return self.expr(&e);
            }
            "len" => return Err(ParseError::ty("len() is not supported; use width(grid) or height(grid)")),
            "range" => return Err(ParseError::ty("range() is only allowed as a for-loop iterable")),
            other => return Err(ParseError::ty(format!("unknown function '{other}'"))),
        };
        if !arity.contains(&args.len()) {
            return Err(ParseError::ty(format!("{func}() got {} arguments", args.len())));
        }
        let mut es = Vec::with_capacity(args.len());
        let mut ts = Vec::with_capacity(args.len());
        for a in args {
            let (e, t) = self.expr(a)?;
            es.push(e);
            ts.push(t);
        }
        let ty = match b {
            Builtin::Abs => ts[0].clone(),
            Builtin::Min | Builtin::Max => ts.iter().skip(1).fold(ts[0].clone(), |acc, t| acc.join(t)),
            Builtin::Int | Builtin::Width | Builtin::Height => Ty::Int,
            Builtin::Float => Ty::Real,
            Builtin::Bool => Ty::Bool,
            Builtin::Pow => Ty::Unknown,
            Builtin::Identity => ts[0].clone(),
        };
        if matches!(b, Builtin::Abs | Builtin::Min | Builtin::Max | Builtin::Float | Builtin::Pow | Builtin::Int) {
            for t in &ts {
                self.need_numeric(t, func)?;
            }
        }
        if matches!(b, Builtin::Width | Builtin::Height) && !matches!(ts[0], Ty::Grid { .. } | Ty::Unknown) {
            return Err(ParseError::ty(format!("{func}() expects a grid")));
        }
        Ok((Ex::Builtin(b, es), ty))
    }

    fn make_record(&mut self, kind: RecordKind, args: &[Expr], kwargs: &[(String, Expr)]) -> Result<(Ex, Ty), ParseError> {
        let rec = self.schema.record(kind);
        let n = rec.fields.len();
        if args.len() > n {
            return Err(ParseError::ty(format!("{}() takes {} fields, got {}", rec.name, n, args.len())));
        }
        let mut slots: Vec<Option<Ex>> = vec![None; n];
        let rec_name = rec.name.clone();
        let names: Vec<String> = rec.fields.iter().map(|f| f.name.clone()).collect();
        for (i, a) in args.iter().enumerate() {
            slots[i] = Some(self.expr(a)?.0);
        }
        for (k, v) in kwargs {
            let i = names
                .iter()
                .position(|f| f == k)
                .ok_or_else(|| ParseError::ty(format!("unknown field '{k}' for {rec_name}")))?;
            if slots[i].is_some() {
                return Err(ParseError::ty(format!("field '{k}' given twice for {rec_name}")));
            }
            slots[i] = Some(self.expr(v)?.0);
        }
        let mut es = Vec::with_capacity(n);
        for (i, s) in slots.into_iter().enumerate() {
            es.push(s.ok_or_else(|| ParseError::ty(format!("missing field '{}' for {rec_name}", names[i])))?);
        }
        let names: Arc<[Arc<str>]> = names.iter().map(|n| Arc::from(n.as_str())).collect();
        Ok((Ex::MakeRecord(names, es), Ty::Record(kind)))
    }

    fn sample(&mut self, args: &[Expr], kwargs: &[(String, Expr)]) -> Result<(Ex, Ty), ParseError> {
        if !kwargs.is_empty() || args.len() != 2 {
            return Err(ParseError::ty("sample takes exactly two arguments: sample(\"name\", Distribution(...))"));
        }
        let Expr::Str(site) = &args[0] else {
            return Err(ParseError::restriction("non-literal sample site name", 0));
        };
        let Expr::Call { func, args: dargs, kwargs: dkw } = &args[1] else {
            return Err(ParseError::ty("sample expects a distribution constructor as its second argument"));
        };
        let Some(dname) = enum_name_of_dist(func) else {
            return Err(ParseError::ty(format!("unknown distribution '{func}' (use Bernoulli, Categorical, UniformInt)")));
        };
        let mut dargs: Vec<&Expr> = dargs.iter().collect();
        for (k, v) in dkw {
            let ok = matches!((dname, k.as_str()), ("Bernoulli", "probs" | "p") | ("Categorical", "probs" | "weights"));
            if !ok || !dargs.is_empty() {
                return Err(ParseError::ty(format!("unexpected argument '{k}' for {dname}")));
            }
            dargs.push(v);
        }
        let (dist, ty) = match (dname, dargs.as_slice()) {
            ("Bernoulli", [p]) => {
                let (pe, pt) = self.expr(p)?;
                self.need_numeric(&pt, "Bernoulli")?;
                (Dist::Bernoulli(Box::new(pe)), Ty::Bool)
            }
            ("Categorical", [w]) => {
                let w = match w {
                    Expr::Call { func, args, kwargs } if func == "torch.tensor" && args.len() == 1 && kwargs.is_empty() => {
                        &args[0]
                    }
                    other => other,
                };
                let Expr::List(items) = w else {
                    return Err(ParseError::ty("Categorical expects a list literal of weights"));
                };
                if items.is_empty() {
                    return Err(ParseError::ty("Categorical needs at least one weight"));
                }
                let items = items.iter().map(|i| self.expr(i).map(|(e, _)| e)).collect::<Result<_, _>>()?;
                (Dist::Categorical(items), Ty::Int)
            }
            ("UniformInt", [lo, hi]) => {
                let (l, _) = self.expr(lo)?;
                let (h, _) = self.expr(hi)?;
                (Dist::UniformInt(Box::new(l), Box::new(h)), Ty::Int)
            }
            _ => return Err(ParseError::ty(format!("wrong number of arguments for {dname}"))),
        };
        let id = self.sites.len() as u16;
        self.sites.push(site.clone());
        Ok((Ex::Sample(id, dist), ty))
    }
}
