//! Random program generators for property tests.
//!
//! [`random_function`] produces arbitrary syntax trees that the parser can
//! reproduce exactly (for print/parse round trips). [`random_typed_transition`]
//! produces well-typed transition programs over [`int_schema`] for
//! execution properties such as termination within the static step bound.

use std::sync::Arc;

use pomdp_core::schema::{DomainSchema, FieldDef, FieldType, RecordDef};
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::ast::{BinOp, CmpOp, Expr, FunctionDef, Stmt, Target, UnOp};

const NAMES: &[&str] = &["a", "b", "x", "y", "state", "grid", "n_2", "_tmp"];
const FUNCS: &[&str] = &["f", "sample", "Bernoulli", "dist.Categorical", "m.n.o"];
const BINOPS: &[BinOp] = &[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::FloorDiv, BinOp::Mod];
const CMPOPS: &[CmpOp] = &[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::In, CmpOp::NotIn];

fn name<R: Rng + ?Sized>(rng: &mut R) -> String {
    NAMES.choose(rng).unwrap().to_string()
}

pub fn random_expr<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.random_bool(0.3);
    if leaf {
        return match rng.random_range(0..5) {
            0 => Expr::Int(rng.random_range(0..1000)),
            1 => Expr::Real(rng.random_range(0..4000) as f64 / 8.0),
            2 => Expr::Bool(rng.random()),
            3 => Expr::Str(format!("site_{}", rng.random_range(0..10))),
            _ => Expr::Name(name(rng)),
        };
    }
    let d = depth - 1;
    let b = |rng: &mut R| Box::new(random_expr(rng, d));
    match rng.random_range(0..11) {
        0 => Expr::Attr(b(rng), name(rng)),
        1 => Expr::Index(b(rng), b(rng), b(rng)),
        2 => Expr::Unary(if rng.random() { UnOp::Neg } else { UnOp::Not }, b(rng)),
        3 | 4 => Expr::Binary(*BINOPS.choose(rng).unwrap(), b(rng), b(rng)),
        5 => Expr::Compare(*CMPOPS.choose(rng).unwrap(), b(rng), b(rng)),
        6 => Expr::And(b(rng), b(rng)),
        7 => Expr::Or(b(rng), b(rng)),
        8 => Expr::IfExp { body: b(rng), cond: b(rng), orelse: b(rng) },
        9 => {
            let n = rng.random_range(0..3);
            let k = rng.random_range(0..2);
            Expr::Call {
                func: FUNCS.choose(rng).unwrap().to_string(),
                args: (0..n).map(|_| random_expr(rng, d)).collect(),
                kwargs: (0..k).map(|_| (name(rng), random_expr(rng, d))).collect(),
            }
        }
        _ => Expr::List((0..rng.random_range(0..4)).map(|_| random_expr(rng, d)).collect()),
    }
}

fn random_target<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> Target {
    Target {
        var: name(rng),
        fields: (0..rng.random_range(0..3)).map(|_| name(rng)).collect(),
        index: rng.random_bool(0.3).then(|| (random_expr(rng, depth), random_expr(rng, depth))),
    }
}

fn random_block<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> Vec<Stmt> {
    (0..rng.random_range(1..4)).map(|_| random_stmt(rng, depth)).collect()
}

fn random_stmt<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> Stmt {
    let nested = depth > 0 && rng.random_bool(0.35);
    if nested {
        let d = depth - 1;
        return if rng.random() {
            Stmt::If {
                branches: (0..rng.random_range(1..3)).map(|_| (random_expr(rng, 2), random_block(rng, d))).collect(),
                orelse: if rng.random() { random_block(rng, d) } else { Vec::new() },
            }
        } else {
            Stmt::For {
                var: name(rng),
                start: rng.random_bool(0.5).then(|| random_expr(rng, 1)),
                end: random_expr(rng, 1),
                body: random_block(rng, d),
            }
        };
    }
    match rng.random_range(0..5) {
        0 => Stmt::Pass,
        1 => Stmt::Return((0..rng.random_range(1..3)).map(|_| random_expr(rng, 3)).collect()),
        2 => Stmt::AugAssign { target: random_target(rng, 1), op: *BINOPS.choose(rng).unwrap(), value: random_expr(rng, 3) },
        _ => Stmt::Assign { target: random_target(rng, 1), value: random_expr(rng, 3) },
    }
}

/// Arbitrary syntax tree; not necessarily well typed.
pub fn random_function<R: Rng + ?Sized>(rng: &mut R) -> FunctionDef {
    FunctionDef {
        name: "f".into(),
        params: (0..rng.random_range(0..4)).map(|i| format!("p{i}")).collect(),
        body: random_block(rng, 4),
    }
}

/// Two bounded int fields, used by [`random_typed_transition`].
pub fn int_schema() -> Arc<DomainSchema> {
    Arc::new(DomainSchema {
        name: "Counter".into(),
        description: String::new(),
        goal_description: String::new(),
        enums: vec![],
        actions: vec!["UP".into(), "DOWN".into()],
        state: RecordDef {
            name: "CounterState".into(),
            fields: vec![
                FieldDef::new("a", FieldType::Int { lo: -1_000_000, hi: 1_000_000 }),
                FieldDef::new("b", FieldType::Int { lo: -1_000_000, hi: 1_000_000 }),
            ],
        },
        observation: RecordDef { name: "CounterObs".into(), fields: vec![FieldDef::new("a", FieldType::Bool)] },
    })
}

struct Typed<'r, R: ?Sized> {
    rng: &'r mut R,
    sites: u32,
}

impl<R: Rng + ?Sized> Typed<'_, R> {
    fn int_expr(&mut self, depth: u32, vars: &[String]) -> Expr {
        if depth == 0 || self.rng.random_bool(0.35) {
            return match self.rng.random_range(0..4) {
                0 => Expr::Int(self.rng.random_range(0..20)),
                1 => Expr::Attr(Box::new(Expr::Name("state".into())), if self.rng.random() { "a" } else { "b" }.into()),
                2 => Expr::Name("action".into()),
                _ => Expr::Name(vars.choose(self.rng).unwrap().clone()),
            };
        }
        let d = depth - 1;
        match self.rng.random_range(0..5) {
            0 => {
                self.sites += 1;
                Expr::Call {
                    func: "sample".into(),
                    args: vec![
                        Expr::Str(format!("u{}", self.sites)),
                        Expr::Call { func: "UniformInt".into(), args: vec![Expr::Int(0), Expr::Int(2)], kwargs: vec![] },
                    ],
                    kwargs: vec![],
                }
            }
            1 => Expr::IfExp {
                body: Box::new(self.int_expr(d, vars)),
                cond: Box::new(self.bool_expr(d, vars)),
                orelse: Box::new(self.int_expr(d, vars)),
            },
            _ => {
                let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::FloorDiv, BinOp::Mod].choose(self.rng).unwrap();
                Expr::Binary(op, Box::new(self.int_expr(d, vars)), Box::new(self.int_expr(d, vars)))
            }
        }
    }

    fn bool_expr(&mut self, depth: u32, vars: &[String]) -> Expr {
        if depth == 0 || self.rng.random_bool(0.3) {
            self.sites += 1;
            return Expr::Call {
                func: "sample".into(),
                args: vec![
                    Expr::Str(format!("c{}", self.sites)),
                    Expr::Call { func: "Bernoulli".into(), args: vec![Expr::Real(0.25)], kwargs: vec![] },
                ],
                kwargs: vec![],
            };
        }
        let d = depth - 1;
        match self.rng.random_range(0..3) {
            0 => Expr::Compare(
                *[CmpOp::Lt, CmpOp::Eq, CmpOp::Ge].choose(self.rng).unwrap(),
                Box::new(self.int_expr(d, vars)),
                Box::new(self.int_expr(d, vars)),
            ),
            1 => Expr::And(Box::new(self.bool_expr(d, vars)), Box::new(self.bool_expr(d, vars))),
            _ => Expr::Unary(UnOp::Not, Box::new(self.bool_expr(d, vars))),
        }
    }

    fn block(&mut self, depth: u32, vars: &mut Vec<String>) -> Vec<Stmt> {
        let n = self.rng.random_range(1..4);
        let mut out = Vec::new();
        for _ in 0..n {
            let nested = depth > 0 && self.rng.random_bool(0.4);
            if nested && self.rng.random() {
                let cond = self.bool_expr(1, vars);
                let body = self.block(depth - 1, &mut vars.clone());
                let orelse = self.block(depth - 1, &mut vars.clone());
                out.push(Stmt::If { branches: vec![(cond, body)], orelse });
            } else if nested {
                let var = format!("i{}", vars.len());
                let mut inner = vars.clone();
                inner.push(var.clone());
                let end = Expr::Int(self.rng.random_range(0..5));
                let body = self.block(depth - 1, &mut inner);
                out.push(Stmt::For { var, start: None, end, body });
            } else if self.rng.random_bool(0.15) {
                out.push(Stmt::Return(vec![Expr::Name("state".into())]));
            } else {
                let v = vars.choose(self.rng).unwrap().clone();
                let value = self.int_expr(2, vars);
                let target = if v.starts_with('i') { Target::var("v0") } else { Target::var(v) };
                out.push(Stmt::Assign { target, value });
            }
        }
        out
    }
}

/// Well-typed `transition_func` over [`int_schema`] with loops, branches
/// and sample sites. Runs may still fail (e.g. division by zero).
pub fn random_typed_transition<R: Rng + ?Sized>(rng: &mut R) -> FunctionDef {
    let mut g = Typed { rng, sites: 0 };
    let mut vars: Vec<String> = vec!["v0".into(), "v1".into()];
    let mut body = vec![
        Stmt::Assign { target: Target::var("v0"), value: Expr::Int(1) },
        Stmt::Assign { target: Target::var("v1"), value: Expr::Int(2) },
    ];
    body.extend(g.block(3, &mut vars));
    body.push(Stmt::Assign {
        target: Target { var: "state".into(), fields: vec!["a".into()], index: None },
        value: Expr::Call { func: "max".into(), args: vec![Expr::Int(-5), Expr::Name("v0".into())], kwargs: vec![] },
    });
    body.push(Stmt::Return(vec![Expr::Name("state".into())]));
    FunctionDef { name: "transition_func".into(), params: vec!["state".into(), "action".into()], body }
}
