use thiserror::Error;

/// Errors raised while turning source text into a checked program.
///
/// Every variant carries enough structure to be rendered back to a program
/// proposer as feedback.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("SyntaxError at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("RestrictionError: {construct} is not allowed{}", line_suffix(*.line))]
    Restriction { construct: String, line: usize },
    #[error("TypeError: {msg}")]
    Type { msg: String },
}

fn line_suffix(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" (line {line})")
    }
}

impl ParseError {
    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "syntax",
            ParseError::Restriction { .. } => "restriction",
            ParseError::Type { .. } => "type",
        }
    }

    pub(crate) fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError::Syntax { line, col, msg: msg.into() }
    }

    pub(crate) fn restriction(construct: impl Into<String>, line: usize) -> Self {
        ParseError::Restriction { construct: construct.into(), line }
    }

    pub(crate) fn ty(msg: impl Into<String>) -> Self {
        ParseError::Type { msg: msg.into() }
    }
}

/// Failures while executing a checked program on concrete inputs.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RunError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("grid index ({x}, {y}) out of bounds for {width}x{height} grid")]
    IndexOutOfBounds { x: i64, y: i64, width: usize, height: usize },
    #[error("invalid distribution parameter: {0}")]
    InvalidDistribution(String),
    #[error("type error at runtime: {0}")]
    Type(String),
    #[error("variable '{0}' used before assignment")]
    Unbound(String),
    #[error("function ended without returning a value")]
    NoReturn,
    #[error("returned value does not conform to the schema: {0}")]
    Output(String),
    #[error("input does not conform to the template: {0}")]
    Input(String),
    #[error("execution exceeded the static step bound of {0}")]
    StepLimit(u64),
}
