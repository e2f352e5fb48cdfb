//! Syntax tree for model programs. Nodes carry no source spans so that
//! structurally equal programs compare equal regardless of formatting.

use std::fmt;

/// The four model components and their fixed function templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ComponentKind {
    Initial,
    Transition,
    Observation,
    Reward,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 4] =
        [ComponentKind::Initial, ComponentKind::Transition, ComponentKind::Observation, ComponentKind::Reward];

    pub fn func_name(self) -> &'static str {
        match self {
            ComponentKind::Initial => "initial_func",
            ComponentKind::Transition => "transition_func",
            ComponentKind::Observation => "observation_func",
            ComponentKind::Reward => "reward_func",
        }
    }

    /// Short identifier used in file names, logs and the `.pps` header.
    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::Initial => "initial",
            ComponentKind::Transition => "transition",
            ComponentKind::Observation => "observation",
            ComponentKind::Reward => "reward",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ComponentKind::Initial => &["empty_state"],
            ComponentKind::Transition => &["state", "action"],
            ComponentKind::Observation => &["state", "action", "empty_obs"],
            ComponentKind::Reward => &["state", "action", "next_state"],
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s || k.func_name() == s)
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign { target: Target, value: Expr },
    AugAssign { target: Target, op: BinOp, value: Expr },
    If { branches: Vec<(Expr, Vec<Stmt>)>, orelse: Vec<Stmt> },
    For { var: String, start: Option<Expr>, end: Expr, body: Vec<Stmt> },
    Return(Vec<Expr>),
    Pass,
}

/// Assignment target: `x`, `x.f`, `x[i, j]` or `x.f[i, j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub var: String,
    pub fields: Vec<String>,
    pub index: Option<(Expr, Expr)>,
}

impl Target {
    pub fn var(name: impl Into<String>) -> Self {
        Target { var: name.into(), fields: Vec::new(), index: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(String),
    Name(String),
    Attr(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Compare(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    IfExp { body: Box<Expr>, cond: Box<Expr>, orelse: Box<Expr> },
    /// Call of a (possibly dotted) name, e.g. `sample(...)`, `TigerState(...)`.
    Call { func: String, args: Vec<Expr>, kwargs: Vec<(String, Expr)> },
    List(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    NotIn,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::In => "in",
            CmpOp::NotIn => "not in",
        }
    }
}
