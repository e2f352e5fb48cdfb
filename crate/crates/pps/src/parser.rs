//! Recursive-descent parser producing [`FunctionDef`] syntax trees.
//!
//! Constructs outside the restricted grammar are rejected here with a
//! [`ParseError::Restriction`] so that feedback names the construct.

use crate::ast::{BinOp, CmpOp, Expr, FunctionDef, Stmt, Target, UnOp};
use crate::error::ParseError;
use crate::lexer::{tokenize, Tok, Token};

/// Parses a source file holding exactly one top-level function definition.
pub fn parse_function(src: &str) -> Result<FunctionDef, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { toks: tokens, pos: 0 };
    p.skip_newlines();
    let mut found: Option<FunctionDef> = None;
    while !p.at(&Tok::Eof) {
        let line = p.peek().line;
        match p.peek_name() {
            Some("def") => {
                if found.is_some() {
                    return Err(ParseError::restriction("helper function outside the model function", line));
                }
                found = Some(p.function_def()?);
            }
            Some("import") | Some("from") => return Err(ParseError::restriction("import", line)),
            Some("class") => return Err(ParseError::restriction("class definition", line)),
            _ => {
                if let Tok::Str(_) = p.peek().tok {
                    // module docstring
                    p.bump();
                    p.expect_newline()?;
                } else if p.at(&Tok::Op("@")) {
                    return Err(ParseError::restriction("decorator", line));
                } else {
                    return Err(ParseError::restriction("top-level statement", line));
                }
            }
        }
        p.skip_newlines();
    }
    found.ok_or_else(|| ParseError::syntax(1, 1, "no function definition found"))
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

const KEYWORDS: &[&str] = &[
    "def", "return", "if", "elif", "else", "for", "in", "and", "or", "not", "True", "False", "pass", "while", "import",
    "from", "class", "lambda", "try", "except", "finally", "with", "break", "continue", "None", "is", "global",
    "nonlocal", "yield", "assert", "del", "raise", "async", "await",
];

fn forbidden_statement(kw: &str) -> Option<&'static str> {
    Some(match kw {
        "while" => "while loop",
        "import" | "from" => "import",
        "def" => "nested function definition",
        "class" => "class definition",
        "try" | "except" | "finally" => "try statement",
        "with" => "with statement",
        "break" => "break",
        "continue" => "continue",
        "raise" => "raise",
        "global" | "nonlocal" => "global declaration",
        "yield" => "yield",
        "assert" => "assert",
        "del" => "del",
        "async" | "await" => "async code",
        "lambda" => "lambda",
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn peek_name(&self) -> Option<&str> {
        match &self.peek().tok {
            Tok::Name(n) => Some(n.as_str()),
            _ => None,
        }
    }

    fn at(&self, t: &Tok) -> bool {
        &self.peek().tok == t
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.peek().tok, Tok::Op(o) if o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek_name() == Some(kw)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError::syntax(t.line, t.col, msg))
    }

    fn describe(&self) -> String {
        match &self.peek().tok {
            Tok::Name(n) => format!("'{n}'"),
            Tok::Int(i) => format!("'{i}'"),
            Tok::Float(f) => format!("'{f}'"),
            Tok::Str(_) => "string".into(),
            Tok::Op(o) => format!("'{o}'"),
            Tok::Newline => "end of line".into(),
            Tok::Indent => "indent".into(),
            Tok::Dedent => "dedent".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), ParseError> {
        if self.at_op(op) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected '{op}', found {}", self.describe()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected '{kw}', found {}", self.describe()))
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek_name() {
            Some(n) if !KEYWORDS.contains(&n) => {
                let n = n.to_string();
                self.bump();
                Ok(n)
            }
            _ => self.err(format!("expected identifier, found {}", self.describe())),
        }
    }

    fn expect_newline(&mut self) -> Result<(), ParseError> {
        if self.at(&Tok::Newline) {
            self.bump();
            Ok(())
        } else if self.at(&Tok::Eof) || self.at(&Tok::Dedent) {
            Ok(())
        } else if self.at_op(";") {
            self.err("multiple statements on one line")
        } else {
            self.err(format!("expected end of line, found {}", self.describe()))
        }
    }

    fn skip_newlines(&mut self) {
        while self.at(&Tok::Newline) {
            self.bump();
        }
    }

    fn function_def(&mut self) -> Result<FunctionDef, ParseError> {
        self.expect_kw("def")?;
        let name = self.expect_ident()?;
        self.expect_op("(")?;
        let mut params = Vec::new();
        while !self.at_op(")") {
            params.push(self.expect_ident()?);
            if self.at_op(":") {
                self.bump();
                self.skip_annotation()?;
            }
            if self.at_op("=") {
                return Err(ParseError::restriction("default parameter value", self.peek().line));
            }
            if !self.at_op(")") {
                self.expect_op(",")?;
            }
        }
        self.expect_op(")")?;
        if self.at_op("->") {
            self.bump();
            self.skip_annotation()?;
        }
        self.expect_op(":")?;
        let body = self.block()?;
        Ok(FunctionDef { name, params, body })
    }

    /// Type annotations are accepted and discarded.
    fn skip_annotation(&mut self) -> Result<(), ParseError> {
        let mut depth = 0usize;
        loop {
            match &self.peek().tok {
                Tok::Op("(") | Tok::Op("[") => depth += 1,
                Tok::Op(")") | Tok::Op("]") if depth > 0 => depth -= 1,
                Tok::Op(",") | Tok::Op(")") | Tok::Op(":") | Tok::Op("=") if depth == 0 => return Ok(()),
                Tok::Newline | Tok::Eof => return self.err("unterminated type annotation"),
                _ => {}
            }
            self.bump();
        }
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        if !self.at(&Tok::Newline) {
            // single-line suite: `if x: return 1`
            let mut out = Vec::new();
            if let Some(s) = self.statement()? {
                out.push(s);
            }
            return Ok(out);
        }
        self.skip_newlines();
        if !self.at(&Tok::Indent) {
            return self.err("expected an indented block");
        }
        self.bump();
        let mut body = Vec::new();
        while !self.at(&Tok::Dedent) && !self.at(&Tok::Eof) {
            if let Some(s) = self.statement()? {
                body.push(s);
            }
            self.skip_newlines();
        }
        if self.at(&Tok::Dedent) {
            self.bump();
        }
        if body.is_empty() {
            // a docstring-only body behaves like `pass`
            body.push(Stmt::Pass);
        }
        Ok(body)
    }

    fn statement(&mut self) -> Result<Option<Stmt>, ParseError> {
        let line = self.peek().line;
        if let Some(kw) = self.peek_name() {
            if let Some(c) = forbidden_statement(kw) {
                return Err(ParseError::restriction(c, line));
            }
            match kw {
                "pass" => {
                    self.bump();
                    self.expect_newline()?;
                    return Ok(Some(Stmt::Pass));
                }
                "return" => {
                    self.bump();
                    let mut vals = Vec::new();
                    if !self.at(&Tok::Newline) && !self.at(&Tok::Eof) && !self.at(&Tok::Dedent) {
                        vals.push(self.expr()?);
                        while self.at_op(",") {
                            self.bump();
                            vals.push(self.expr()?);
                        }
                    }
                    if vals.is_empty() {
                        return Err(ParseError::restriction("bare return", line));
                    }
                    if vals.len() > 2 {
                        return Err(ParseError::restriction("returning more than two values", line));
                    }
                    self.expect_newline()?;
                    return Ok(Some(Stmt::Return(vals)));
                }
                "if" => return self.if_stmt().map(Some),
                "for" => return self.for_stmt().map(Some),
                "elif" | "else" => return self.err(format!("'{kw}' without matching 'if'")),
                _ => {}
            }
        }
        if let Tok::Str(_) = self.peek().tok {
            if matches!(self.peek_at(1), Tok::Newline | Tok::Dedent | Tok::Eof) {
                // docstring or stray string literal
                self.bump();
                self.expect_newline()?;
                return Ok(None);
            }
        }
        let lhs = self.expr()?;
        if self.at_op(",") {
            return Err(ParseError::restriction("tuple assignment", line));
        }
        if self.at_op(":") {
            // annotated assignment `x: int = 3`
            self.bump();
            self.skip_annotation()?;
        }
        let aug = match &self.peek().tok {
            Tok::Op("=") => None,
            Tok::Op("+=") => Some(BinOp::Add),
            Tok::Op("-=") => Some(BinOp::Sub),
            Tok::Op("*=") => Some(BinOp::Mul),
            Tok::Op("/=") => Some(BinOp::Div),
            Tok::Op("//=") => Some(BinOp::FloorDiv),
            Tok::Op("%=") => Some(BinOp::Mod),
            _ => return Err(ParseError::restriction("expression statement", line)),
        };
        self.bump();
        let target = self.to_target(lhs)?;
        let value = self.expr()?;
        if self.at_op(",") {
            return Err(ParseError::restriction("tuple", line));
        }
        if self.at_op("=") {
            return Err(ParseError::restriction("chained assignment", line));
        }
        self.expect_newline()?;
        Ok(Some(match aug {
            None => Stmt::Assign { target, value },
            Some(op) => Stmt::AugAssign { target, op, value },
        }))
    }

    fn to_target(&self, e: Expr) -> Result<Target, ParseError> {
        let (base, index) = match e {
            Expr::Index(b, x, y) => (*b, Some((*x, *y))),
            other => (other, None),
        };
        let mut fields = Vec::new();
        let mut cur = base;
        loop {
            match cur {
                Expr::Name(var) => {
                    fields.reverse();
                    return Ok(Target { var, fields, index });
                }
                Expr::Attr(b, f) => {
                    fields.push(f);
                    cur = *b;
                }
                _ => return self.err("cannot assign to this expression"),
            }
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        self.expect_kw("if")?;
        let mut branches = Vec::new();
        let cond = self.expr()?;
        self.expect_op(":")?;
        branches.push((cond, self.block()?));
        let mut orelse = Vec::new();
        loop {
            self.skip_newlines();
            if self.at_kw("elif") {
                self.bump();
                let c = self.expr()?;
                self.expect_op(":")?;
                branches.push((c, self.block()?));
            } else if self.at_kw("else") {
                self.bump();
                self.expect_op(":")?;
                orelse = self.block()?;
                break;
            } else {
                break;
            }
        }
        Ok(Stmt::If { branches, orelse })
    }

    fn for_stmt(&mut self) -> Result<Stmt, ParseError> {
        let line = self.peek().line;
        self.expect_kw("for")?;
        if matches!(self.peek_at(1), Tok::Op(",")) {
            return Err(ParseError::restriction("tuple unpacking in for loop", line));
        }
        let var = self.expect_ident()?;
        self.expect_kw("in")?;
        if !(self.at_kw("range") && matches!(self.peek_at(1), Tok::Op("("))) {
            return Err(ParseError::restriction("for loop over a non-range iterable", line));
        }
        self.bump();
        self.expect_op("(")?;
        let a = self.expr()?;
        let (start, end) = if self.at_op(",") {
            self.bump();
            let b = self.expr()?;
            if self.at_op(",") {
                return Err(ParseError::restriction("range with a step", line));
            }
            (Some(a), b)
        } else {
            (None, a)
        };
        self.expect_op(")")?;
        self.expect_op(":")?;
        let body = self.block()?;
        Ok(Stmt::For { var, start, end, body })
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.at_kw("lambda") {
            return Err(ParseError::restriction("lambda", self.peek().line));
        }
        let body = self.or_expr()?;
        if self.at_kw("if") {
            self.bump();
            let cond = self.or_expr()?;
            self.expect_kw("else")?;
            let orelse = self.expr()?;
            return Ok(Expr::IfExp { body: Box::new(body), cond: Box::new(cond), orelse: Box::new(orelse) });
        }
        Ok(body)
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.and_expr()?;
        while self.at_kw("or") {
            self.bump();
            let r = self.and_expr()?;
            e = Expr::Or(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.not_expr()?;
        while self.at_kw("and") {
            self.bump();
            let r = self.not_expr()?;
            e = Expr::And(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.at_kw("not") {
            self.bump();
            let e = self.not_expr()?;
            return Ok(Expr::Unary(UnOp::Not, Box::new(e)));
        }
        self.comparison()
    }

    fn cmp_op(&self) -> Option<(CmpOp, usize)> {
        Some(match &self.peek().tok {
            Tok::Op("==") => (CmpOp::Eq, 1),
            Tok::Op("!=") => (CmpOp::Ne, 1),
            Tok::Op("<") => (CmpOp::Lt, 1),
            Tok::Op("<=") => (CmpOp::Le, 1),
            Tok::Op(">") => (CmpOp::Gt, 1),
            Tok::Op(">=") => (CmpOp::Ge, 1),
            Tok::Name(n) if n == "in" => (CmpOp::In, 1),
            Tok::Name(n) if n == "not" && matches!(self.peek_at(1), Tok::Name(m) if m == "in") => (CmpOp::NotIn, 2),
            _ => return None,
        })
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.arith()?;
        if self.at_kw("is") {
            return Err(ParseError::restriction("'is' comparison", self.peek().line));
        }
        let Some((op, n)) = self.cmp_op() else {
            return Ok(lhs);
        };
        for _ in 0..n {
            self.bump();
        }
        let rhs = self.arith()?;
        if self.cmp_op().is_some() {
            return Err(ParseError::restriction("chained comparison", self.peek().line));
        }
        Ok(Expr::Compare(op, Box::new(lhs), Box::new(rhs)))
    }

    fn arith(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op("+") => BinOp::Add,
                Tok::Op("-") => BinOp::Sub,
                _ => return Ok(e),
            };
            self.bump();
            let r = self.term()?;
            e = Expr::Binary(op, Box::new(e), Box::new(r));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op("*") => BinOp::Mul,
                Tok::Op("/") => BinOp::Div,
                Tok::Op("//") => BinOp::FloorDiv,
                Tok::Op("%") => BinOp::Mod,
                Tok::Op("@") => return Err(ParseError::restriction("matrix multiplication", self.peek().line)),
                _ => return Ok(e),
            };
            self.bump();
            let r = self.unary()?;
            e = Expr::Binary(op, Box::new(e), Box::new(r));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().tok {
            Tok::Op("-") => {
                self.bump();
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            Tok::Op("+") => {
                self.bump();
                self.unary()
            }
            Tok::Op("~") | Tok::Op("&") | Tok::Op("|") | Tok::Op("^") => {
                Err(ParseError::restriction("bitwise operator", self.peek().line))
            }
            _ => {
                let base = self.postfix()?;
                if self.at_op("**") {
                    return Err(ParseError::restriction("power operator (use multiplication or pow)", self.peek().line));
                }
                Ok(base)
            }
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        loop {
            if self.at_op(".") {
                self.bump();
                let name = self.expect_ident()?;
                e = Expr::Attr(Box::new(e), name);
            } else if self.at_op("(") {
                let line = self.peek().line;
                let func = dotted_name(&e).ok_or_else(|| ParseError::restriction("call of a computed expression", line))?;
                self.bump();
                let (args, kwargs) = self.call_args()?;
                e = Expr::Call { func, args, kwargs };
            } else if self.at_op("[") {
                let line = self.peek().line;
                self.bump();
                if self.at_op(":") {
                    return Err(ParseError::restriction("slicing", line));
                }
                let x = self.expr()?;
                if self.at_op(":") {
                    return Err(ParseError::restriction("slicing", line));
                }
                if !self.at_op(",") {
                    return Err(ParseError::restriction("single-index subscript (grids are indexed as g[x, y])", line));
                }
                self.bump();
                let y = self.expr()?;
                if self.at_op(",") {
                    return Err(ParseError::restriction("subscript with more than two indices", line));
                }
                self.expect_op("]")?;
                e = Expr::Index(Box::new(e), Box::new(x), Box::new(y));
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> Result<(Vec<Expr>, Vec<(String, Expr)>), ParseError> {
        let mut args = Vec::new();
        let mut kwargs = Vec::new();
        while !self.at_op(")") {
            if self.at_op("*") || self.at_op("**") {
                return Err(ParseError::restriction("argument unpacking", self.peek().line));
            }
            if matches!(self.peek().tok, Tok::Name(_)) && matches!(self.peek_at(1), Tok::Op("=")) {
                let k = self.expect_ident()?;
                self.bump();
                kwargs.push((k, self.expr()?));
            } else {
                if !kwargs.is_empty() {
                    return self.err("positional argument follows keyword argument");
                }
                args.push(self.expr()?);
            }
            if !self.at_op(")") {
                self.expect_op(",")?;
            }
        }
        self.expect_op(")")?;
        Ok((args, kwargs))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Int(i))
            }
            Tok::Float(f) => {
                self.bump();
                Ok(Expr::Real(f))
            }
            Tok::Str(s) => {
                self.bump();
                if let Tok::Str(_) = self.peek().tok {
                    return Err(ParseError::restriction("implicit string concatenation", t.line));
                }
                Ok(Expr::Str(s))
            }
            Tok::Name(ref n) => match n.as_str() {
                "True" => {
                    self.bump();
                    Ok(Expr::Bool(true))
                }
                "False" => {
                    self.bump();
                    Ok(Expr::Bool(false))
                }
                "None" => Err(ParseError::restriction("None", t.line)),
                "lambda" => Err(ParseError::restriction("lambda", t.line)),
                "yield" => Err(ParseError::restriction("yield", t.line)),
                "await" => Err(ParseError::restriction("async code", t.line)),
                kw if KEYWORDS.contains(&kw) => self.err(format!("unexpected keyword '{kw}'")),
                _ => {
                    self.bump();
                    Ok(Expr::Name(n.clone()))
                }
            },
            Tok::Op("(") => {
                self.bump();
                if self.at_op(")") {
                    return Err(ParseError::restriction("tuple", t.line));
                }
                let e = self.expr()?;
                if self.at_kw("for") {
                    return Err(ParseError::restriction("comprehension", t.line));
                }
                if self.at_op(",") {
                    return Err(ParseError::restriction("tuple", t.line));
                }
                self.expect_op(")")?;
                Ok(e)
            }
            Tok::Op("[") => {
                self.bump();
                let mut items = Vec::new();
                while !self.at_op("]") {
                    items.push(self.expr()?);
                    if self.at_kw("for") {
                        return Err(ParseError::restriction("comprehension", t.line));
                    }
                    if !self.at_op("]") {
                        self.expect_op(",")?;
                    }
                }
                self.expect_op("]")?;
                Ok(Expr::List(items))
            }
            Tok::Op("{") => Err(ParseError::restriction("dict or set literal", t.line)),
            _ => self.err(format!("unexpected {}", self.describe())),
        }
    }
}

fn dotted_name(e: &Expr) -> Option<String> {
    match e {
        Expr::Name(n) => Some(n.clone()),
        Expr::Attr(b, f) => dotted_name(b).map(|p| format!("{p}.{f}")),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn restriction(src: &str) -> String {
        match parse_function(src) {
            Err(ParseError::Restriction { construct, .. }) => construct,
            other => panic!("expected restriction, got {other:?}"),
        }
    }

    #[test]
    fn parses_typed_signature_and_docstring() {
        let f = parse_function(
            "def transition_func(state: TigerState, action: int) -> TigerState:\n    \"\"\"doc\"\"\"\n    return state\n",
        )
        .unwrap();
        assert_eq!(f.params, vec!["state", "action"]);
        assert_eq!(f.body, vec![Stmt::Return(vec![Expr::Name("state".into())])]);
    }

    #[test]
    fn forbidden_constructs_are_named() {
        let wrap = |body: &str| format!("def f(x):\n    {body}\n    return x\n");
        assert_eq!(restriction(&wrap("while True:\n        pass")), "while loop");
        assert_eq!(restriction(&wrap("import os")), "import");
        assert_eq!(restriction(&wrap("def g():\n        return 1")), "nested function definition");
        assert_eq!(restriction(&wrap("y = lambda: 1")), "lambda");
        assert_eq!(restriction(&wrap("for i in x:\n        pass")), "for loop over a non-range iterable");
        assert_eq!(restriction(&wrap("y = [i for i in range(3)]")), "comprehension");
        assert_eq!(restriction(&wrap("y = 1 < 2 < 3")), "chained comparison");
        assert_eq!(restriction("import pyro\ndef f(x):\n    return x\n"), "import");
    }

    #[test]
    fn elif_chain_and_ternary() {
        let f = parse_function(
            "def f(x):\n    if x == 1:\n        y = 2\n    elif x == 2:\n        y = 3\n    else:\n        y = 4 if x else 5\n    return y\n",
        )
        .unwrap();
        match &f.body[0] {
            Stmt::If { branches, orelse } => {
                assert_eq!(branches.len(), 2);
                assert!(matches!(orelse[0], Stmt::Assign { value: Expr::IfExp { .. }, .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn targets_cover_fields_and_cells() {
        let f = parse_function("def f(s):\n    s.grid[1, 2] = WALL\n    s.x += 1\n    return s\n").unwrap();
        match &f.body[0] {
            Stmt::Assign { target, .. } => {
                assert_eq!(target.var, "s");
                assert_eq!(target.fields, vec!["grid"]);
                assert!(target.index.is_some());
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(f.body[1], Stmt::AugAssign { op: BinOp::Add, .. }));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_function("def f(x):\n    y = (1 +\n    return y\n") {
            Err(ParseError::Syntax { line, .. }) => assert!(line >= 2),
            other => panic!("{other:?}"),
        }
    }
}
