//! Indentation-aware tokenizer for the Python-like surface syntax.

use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    /// Punctuation or operator, e.g. `(`, `+=`, `//`, `->`.
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

// longest first so that greedy matching works
const OPS: &[&str] = &[
    "//=", "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "->", "+", "-", "*", "/", "%", "<", ">",
    "=", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "@", "&", "|", "^", "~",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut indents = vec![0usize];
    let mut depth = 0usize; // bracket nesting; newlines inside brackets are ignored
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut line_start = 0;
    let mut at_line_start = true;

    while i < chars.len() {
        if at_line_start && depth == 0 {
            // measure indentation; skip blank and comment-only lines
            let mut width = 0;
            let mut j = i;
            while j < chars.len() && (chars[j] == ' ' || chars[j] == '\t') {
                width += if chars[j] == '\t' { 8 - width % 8 } else { 1 };
                j += 1;
            }
            if j >= chars.len() {
                i = j;
                break;
            }
            if chars[j] == '\n' || chars[j] == '#' || chars[j] == '\r' {
                while j < chars.len() && chars[j] != '\n' {
                    j += 1;
                }
                i = j + 1;
                line += 1;
                line_start = i;
                continue;
            }
            let col = j - line_start + 1;
            let cur = *indents.last().unwrap();
            if width > cur {
                indents.push(width);
                out.push(Token { tok: Tok::Indent, line, col });
            } else {
                while width < *indents.last().unwrap() {
                    indents.pop();
                    out.push(Token { tok: Tok::Dedent, line, col });
                }
                if width != *indents.last().unwrap() {
                    return Err(ParseError::syntax(line, col, "inconsistent dedent"));
                }
            }
            i = j;
            at_line_start = false;
        }
        let c = chars[i];
        let col = i - line_start + 1;
        match c {
            '\n' => {
                if depth == 0 {
                    out.push(Token { tok: Tok::Newline, line, col });
                    at_line_start = true;
                }
                i += 1;
                line += 1;
                line_start = i;
            }
            ' ' | '\t' | '\r' => i += 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '\\' if chars.get(i + 1) == Some(&'\n') => {
                i += 2;
                line += 1;
                line_start = i;
            }
            '"' | '\'' => {
                let triple = chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c);
                let (s, ni, nl, nls) = lex_string(&chars, i, c, triple, line, line_start)?;
                out.push(Token { tok: Tok::Str(s), line, col });
                i = ni;
                line = nl;
                line_start = nls;
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_') {
                    i += 1;
                }
                let mut is_float = false;
                if i < chars.len() && chars[i] == '.' && !chars.get(i + 1).is_some_and(|d| d.is_alphabetic()) {
                    is_float = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        is_float = true;
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().filter(|&&c| c != '_').collect();
                let tok = if is_float {
                    Tok::Float(text.parse().map_err(|_| ParseError::syntax(line, col, "bad float literal"))?)
                } else {
                    Tok::Int(text.parse().map_err(|_| ParseError::syntax(line, col, "integer literal out of range"))?)
                };
                out.push(Token { tok, line, col });
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                // f-strings and other prefixed literals
                if i < chars.len() && (chars[i] == '"' || chars[i] == '\'') && name.len() <= 2 {
                    return Err(ParseError::restriction(format!("string prefix '{name}'"), line));
                }
                out.push(Token { tok: Tok::Name(name), line, col });
            }
            _ => {
                let rest: String = chars[i..(i + 3).min(chars.len())].iter().collect();
                let op = OPS
                    .iter()
                    .find(|op| rest.starts_with(**op))
                    .ok_or_else(|| ParseError::syntax(line, col, format!("unexpected character '{c}'")))?;
                match *op {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth = depth.saturating_sub(1),
                    _ => {}
                }
                out.push(Token { tok: Tok::Op(op), line, col });
                i += op.len();
            }
        }
    }
    let col = i - line_start + 1;
    if !matches!(out.last().map(|t| &t.tok), None | Some(Tok::Newline) | Some(Tok::Dedent)) {
        out.push(Token { tok: Tok::Newline, line, col });
    }
    while indents.len() > 1 {
        indents.pop();
        out.push(Token { tok: Tok::Dedent, line, col });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

type LexedString = (String, usize, usize, usize);

fn lex_string(
    chars: &[char],
    start: usize,
    quote: char,
    triple: bool,
    mut line: usize,
    mut line_start: usize,
) -> Result<LexedString, ParseError> {
    let col = start - line_start + 1;
    let mut i = start + if triple { 3 } else { 1 };
    let mut s = String::new();
    loop {
        let Some(&c) = chars.get(i) else {
            return Err(ParseError::syntax(line, col, "unterminated string"));
        };
        if c == quote {
            if !triple {
                return Ok((s, i + 1, line, line_start));
            }
            if chars.get(i + 1) == Some(&quote) && chars.get(i + 2) == Some(&quote) {
                return Ok((s, i + 3, line, line_start));
            }
        }
        match c {
            '\\' => {
                let esc = chars.get(i + 1).copied().unwrap_or('\\');
                s.push(match esc {
                    'n' => '\n',
                    't' => '\t',
                    other => other,
                });
                i += 2;
                continue;
            }
            '\n' if !triple => return Err(ParseError::syntax(line, col, "unterminated string")),
            '\n' => {
                line += 1;
                line_start = i + 1;
            }
            _ => {}
        }
        s.push(c);
        i += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn indentation_produces_block_tokens() {
        let t = toks("def f(x):\n    if x:\n        return 1\n    return 2\n");
        assert_eq!(t.iter().filter(|t| **t == Tok::Indent).count(), 2);
        assert_eq!(t.iter().filter(|t| **t == Tok::Dedent).count(), 2);
    }

    #[test]
    fn brackets_suppress_newlines() {
        let t = toks("x = f(1,\n      2)\n");
        assert_eq!(t.iter().filter(|t| **t == Tok::Newline).count(), 1);
    }

    #[test]
    fn numbers_and_operators() {
        assert_eq!(
            toks("a //= 1e-3 + 2 // 3.5"),
            vec![
                Tok::Name("a".into()),
                Tok::Op("//="),
                Tok::Float(1e-3),
                Tok::Op("+"),
                Tok::Int(2),
                Tok::Op("//"),
                Tok::Float(3.5),
                Tok::Newline,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn docstrings_span_lines() {
        let t = toks("def f():\n    \"\"\"doc\n    more\"\"\"\n    return 1\n");
        assert!(t.contains(&Tok::Str("doc\n    more".into())));
    }

    #[test]
    fn bad_dedent_is_reported_with_position() {
        match tokenize("def f():\n    x = 1\n  y = 2\n") {
            Err(ParseError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
