//! A restricted, Python-shaped probabilistic programming language for
//! POMDP component models.
//!
//! Programs are single functions following one of four fixed templates
//! (`initial_func`, `transition_func`, `observation_func`, `reward_func`).
//! Randomness enters only through `sample("site", Dist(...))` with
//! `Bernoulli`, `Categorical` or `UniformInt`, loops have static bounds, and
//! recursion is impossible, so every run terminates and the full output
//! distribution can be enumerated exactly.
//!
//! ```
//! use std::sync::Arc;
//! use pomdp_core::schema::*;
//! use pps::{ComponentKind, Program};
//!
//! let schema = Arc::new(DomainSchema {
//!     name: "Coin".into(),
//!     description: String::new(),
//!     goal_description: String::new(),
//!     enums: vec![],
//!     actions: vec!["FLIP".into()],
//!     state: RecordDef { name: "CoinState".into(), fields: vec![FieldDef::new("heads", FieldType::Bool)] },
//!     observation: RecordDef { name: "CoinObs".into(), fields: vec![] },
//! });
//! let src = "def transition_func(state, action):\n    state.heads = sample(\"flip\", Bernoulli(0.5))\n    return state\n";
//! let p = Program::parse(src, ComponentKind::Transition, schema.clone()).unwrap();
//! let s = schema.default_value(&schema.state);
//! let table = p.enumerate_support(&[s, pomdp_core::Value::Int(0)], 16).unwrap();
//! assert_eq!(table.len(), 2);
//! ```

mod ast;
mod compile;
mod error;
pub mod gen;
mod interp;
mod lexer;
mod parser;
mod printer;
mod support;

use std::fmt;
use std::sync::Arc;

use pomdp_core::{DomainSchema, Value};
use rand::Rng;

pub use ast::{BinOp, CmpOp, ComponentKind, Expr, FunctionDef, Stmt, Target, UnOp};
pub use compile::Compiled;
pub use error::{ParseError, RunError};
pub use interp::{Chooser, RngChooser};
pub use parser::parse_function;
pub use printer::{expr_src, print_function};
pub use support::{SupportTable, TooManySites, DEFAULT_MAX_SITES, MAX_PATHS};

/// Action value passed to the observation model for the initial observation.
pub const NULL_ACTION: i64 = -1;

/// A parsed, checked model program. Cheap to clone.
#[derive(Clone)]
pub struct Program {
    source: Arc<str>,
    ast: Arc<FunctionDef>,
    compiled: Arc<Compiled>,
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Program").field("kind", &self.kind()).field("source", &self.source).finish()
    }
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.kind() == other.kind() && self.ast == other.ast
    }
}

impl Program {
    /// Parses and checks `source` against the template for `kind`.
    pub fn parse(source: &str, kind: ComponentKind, schema: Arc<DomainSchema>) -> Result<Self, ParseError> {
        let ast = parse_function(source)?;
        let compiled = compile::compile(&ast, kind, schema)?;
        Ok(Program { source: Arc::from(source), ast: Arc::new(ast), compiled: Arc::new(compiled) })
    }

    /// Checks a syntax tree; the stored source is its canonical rendering.
    pub fn from_ast(ast: FunctionDef, kind: ComponentKind, schema: Arc<DomainSchema>) -> Result<Self, ParseError> {
        let compiled = compile::compile(&ast, kind, schema)?;
        let source = print_function(&ast);
        Ok(Program { source: Arc::from(source), ast: Arc::new(ast), compiled: Arc::new(compiled) })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn kind(&self) -> ComponentKind {
        self.compiled.kind
    }

    pub fn ast(&self) -> &FunctionDef {
        &self.ast
    }

    pub fn schema(&self) -> &Arc<DomainSchema> {
        &self.compiled.schema
    }

    /// Distinct sample site names in order of first appearance.
    pub fn site_names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in &self.compiled.sites {
            if !out.contains(&s.as_str()) {
                out.push(s);
            }
        }
        out
    }

    /// True when the program contains no `sample` call.
    pub fn is_deterministic(&self) -> bool {
        self.compiled.sites.is_empty()
    }

    /// Static upper bound on executed statements.
    pub fn step_bound(&self) -> u64 {
        self.compiled.step_bound
    }

    pub fn pretty(&self) -> String {
        print_function(&self.ast)
    }

    /// Runs once with a seeded generator.
    pub fn run(&self, inputs: &[Value], seed: u64) -> Result<Value, RunError> {
        self.run_with(inputs, &mut pomdp_core::seed::rng(seed))
    }

    pub fn run_with<R: Rng + ?Sized>(&self, inputs: &[Value], rng: &mut R) -> Result<Value, RunError> {
        self.run_counted(inputs, rng).0
    }

    /// Runs once and also reports the number of statements executed.
    pub fn run_counted<R: Rng + ?Sized>(&self, inputs: &[Value], rng: &mut R) -> (Result<Value, RunError>, u64) {
        let mut ch = RngChooser(rng);
        let mut steps = 0;
        let r = interp::execute(&self.compiled, inputs, &mut ch, &mut steps);
        (flatten(r), steps)
    }

    /// Runs with an arbitrary choice source.
    pub fn run_chooser(&self, inputs: &[Value], chooser: &mut dyn Chooser) -> Result<Value, RunError> {
        let mut steps = 0;
        flatten(interp::execute(&self.compiled, inputs, chooser, &mut steps))
    }

    /// Exact output distribution, or [`TooManySites`] when some path reaches
    /// more than `max_sites` choices or the path count explodes.
    pub fn enumerate_support(&self, inputs: &[Value], max_sites: usize) -> Result<SupportTable, TooManySites> {
        support::enumerate(&self.compiled, inputs, max_sites)
    }

    /// File contents with the `# component: <kind>` header line.
    pub fn to_file_contents(&self) -> String {
        if self.source.starts_with("# component:") {
            return self.source.to_string();
        }
        format!("# component: {}\n{}", self.kind(), self.source)
    }

    /// Reads a file written by [`to_file_contents`](Self::to_file_contents).
    pub fn from_file_contents(text: &str, schema: Arc<DomainSchema>) -> Result<Self, ParseError> {
        let header = text.lines().next().unwrap_or("");
        let kind = header
            .strip_prefix("# component:")
            .and_then(|k| ComponentKind::parse(k.trim()))
            .ok_or_else(|| ParseError::Syntax { line: 1, col: 1, msg: "missing '# component: <kind>' header".into() })?;
        Self::parse(text, kind, schema)
    }
}

fn flatten(r: Result<Value, interp::Halt>) -> Result<Value, RunError> {
    match r {
        Ok(v) => Ok(v),
        Err(interp::Halt::Err(e)) => Err(e),
        Err(interp::Halt::Abort) => Err(RunError::Type("run abandoned by chooser".into())),
    }
}
