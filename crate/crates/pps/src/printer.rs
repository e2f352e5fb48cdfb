//! Canonical source rendering. Parentheses are emitted only where the
//! grammar needs them, so `parse(print(f)) == f` for every tree.

use std::fmt::Write as _;

use crate::ast::{BinOp, Expr, FunctionDef, Stmt, Target, UnOp};

const INDENT: &str = "    ";

// binding strength, loosest first
const P_IFEXP: u8 = 1;
const P_OR: u8 = 2;
const P_AND: u8 = 3;
const P_NOT: u8 = 4;
const P_CMP: u8 = 5;
const P_ADD: u8 = 6;
const P_MUL: u8 = 7;
const P_UNARY: u8 = 8;
const P_ATOM: u8 = 9;

pub fn print_function(f: &FunctionDef) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "def {}({}):", f.name, f.params.join(", "));
    print_block(&mut out, &f.body, 1);
    out
}

fn print_block(out: &mut String, body: &[Stmt], depth: usize) {
    if body.is_empty() {
        indent(out, depth);
        out.push_str("pass\n");
    }
    for s in body {
        print_stmt(out, s, depth);
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match s {
        Stmt::Assign { target, value } => {
            let _ = writeln!(out, "{} = {}", target_src(target), expr_src(value));
        }
        Stmt::AugAssign { target, op, value } => {
            let _ = writeln!(out, "{} {}= {}", target_src(target), op.symbol(), expr_src(value));
        }
        Stmt::If { branches, orelse } => {
            for (i, (cond, body)) in branches.iter().enumerate() {
                if i > 0 {
                    indent(out, depth);
                }
                let _ = writeln!(out, "{} {}:", if i == 0 { "if" } else { "elif" }, expr_src(cond));
                print_block(out, body, depth + 1);
            }
            if !orelse.is_empty() {
                indent(out, depth);
                out.push_str("else:\n");
                print_block(out, orelse, depth + 1);
            }
        }
        Stmt::For { var, start, end, body } => {
            match start {
                Some(s) => {
                    let _ = writeln!(out, "for {var} in range({}, {}):", expr_src(s), expr_src(end));
                }
                None => {
                    let _ = writeln!(out, "for {var} in range({}):", expr_src(end));
                }
            }
            print_block(out, body, depth + 1);
        }
        Stmt::Return(vals) => {
            let vals: Vec<String> = vals.iter().map(expr_src).collect();
            let _ = writeln!(out, "return {}", vals.join(", "));
        }
        Stmt::Pass => out.push_str("pass\n"),
    }
}

fn target_src(t: &Target) -> String {
    let mut s = t.var.clone();
    for f in &t.fields {
        s.push('.');
        s.push_str(f);
    }
    if let Some((x, y)) = &t.index {
        let _ = write!(s, "[{}, {}]", expr_src(x), expr_src(y));
    }
    s
}

pub fn expr_src(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::IfExp { .. } => P_IFEXP,
        Expr::Or(..) => P_OR,
        Expr::And(..) => P_AND,
        Expr::Unary(UnOp::Not, _) => P_NOT,
        Expr::Compare(..) => P_CMP,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => P_ADD,
        Expr::Binary(..) => P_MUL,
        Expr::Unary(UnOp::Neg, _) => P_UNARY,
        _ => P_ATOM,
    }
}

/// Writes `e`, parenthesized when it binds looser than `min`.
fn write_expr(out: &mut String, e: &Expr, min: u8) {
    let p = prec(e);
    if p < min {
        out.push('(');
        write_expr(out, e, 0);
        out.push(')');
        return;
    }
    match e {
        Expr::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Expr::Real(r) => {
            let _ = write!(out, "{r:?}");
        }
        Expr::Bool(b) => out.push_str(if *b { "True" } else { "False" }),
        Expr::Str(s) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
        Expr::Name(n) => out.push_str(n),
        Expr::Attr(b, f) => {
            // `1.x` would lex as a float; any non-atom base needs parens
            let needs = matches!(**b, Expr::Int(_) | Expr::Real(_));
            if needs {
                out.push('(');
            }
            write_expr(out, b, P_ATOM);
            if needs {
                out.push(')');
            }
            out.push('.');
            out.push_str(f);
        }
        Expr::Index(b, x, y) => {
            write_expr(out, b, P_ATOM);
            out.push('[');
            write_expr(out, x, 0);
            out.push_str(", ");
            write_expr(out, y, 0);
            out.push(']');
        }
        Expr::Unary(UnOp::Neg, x) => {
            out.push('-');
            write_expr(out, x, P_UNARY);
        }
        Expr::Unary(UnOp::Not, x) => {
            out.push_str("not ");
            write_expr(out, x, P_NOT);
        }
        Expr::Binary(op, a, b) => {
            write_expr(out, a, p);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, p + 1);
        }
        Expr::Compare(op, a, b) => {
            write_expr(out, a, P_CMP + 1);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, P_CMP + 1);
        }
        Expr::And(a, b) => {
            write_expr(out, a, P_AND);
            out.push_str(" and ");
            write_expr(out, b, P_AND + 1);
        }
        Expr::Or(a, b) => {
            write_expr(out, a, P_OR);
            out.push_str(" or ");
            write_expr(out, b, P_OR + 1);
        }
        Expr::IfExp { body, cond, orelse } => {
            write_expr(out, body, P_OR);
            out.push_str(" if ");
            write_expr(out, cond, P_OR);
            out.push_str(" else ");
            write_expr(out, orelse, P_IFEXP);
        }
        Expr::Call { func, args, kwargs } => {
            out.push_str(func);
            out.push('(');
            let mut first = true;
            for a in args {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                write_expr(out, a, 0);
            }
            for (k, v) in kwargs {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                out.push_str(k);
                out.push('=');
                write_expr(out, v, 0);
            }
            out.push(')');
        }
        Expr::List(items) => {
            out.push('[');
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, it, 0);
            }
            out.push(']');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_function;

    fn round_trip(src: &str) {
        let f = parse_function(src).unwrap();
        let printed = print_function(&f);
        assert_eq!(parse_function(&printed).unwrap(), f, "printed:\n{printed}");
    }

    #[test]
    fn precedence_survives() {
        round_trip("def f(a, b):\n    return (a - (b - 1)) * -(a + b) // 2 % 3\n");
        round_trip("def f(a, b):\n    return not (a and (b or a)) == (a if b else (b if a else a))\n");
        round_trip("def f(a, b):\n    return (a == b) == (b < a)\n");
        round_trip("def f(a, b):\n    return --a - -b\n");
    }

    #[test]
    fn nested_if_five_deep() {
        let mut src = String::from("def f(x):\n");
        for d in 1..=5 {
            let pad = "    ".repeat(d);
            src.push_str(&format!("{pad}if x > {d}:\n"));
        }
        src.push_str(&format!("{}return 1\n", "    ".repeat(6)));
        for d in (1..=5).rev() {
            let pad = "    ".repeat(d);
            src.push_str(&format!("{pad}else:\n{pad}    x = {d}\n"));
        }
        src.push_str("    return x\n");
        round_trip(&src);
    }
}
