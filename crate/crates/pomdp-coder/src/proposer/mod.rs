//! Program proposers: the request type, prompt construction, code-block
//! extraction, and the HTTP and scripted implementations.

mod http;
pub mod prompts;
mod scripted;

use std::sync::Arc;

use pomdp_core::DomainSchema;
use pps::{ComponentKind, ParseError, Program};
use thiserror::Error;

pub use http::{EndpointConfig, HttpProposer};
pub use prompts::{build_direct_prompt, build_initial_prompt, build_refinement_prompt, code_blocks, extract_action};
pub use scripted::{ScriptedCompleter, ScriptedProposer};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProposeError {
    #[error("response contains no fenced code block")]
    NoCodeBlock,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("request failed after {attempts} attempt(s): {msg}")]
    Transport { attempts: usize, msg: String },
    #[error("endpoint returned HTTP {status} after {attempts} attempt(s): {body}")]
    Status { status: u16, attempts: usize, body: String },
    #[error("malformed completion response: {0}")]
    BadResponse(String),
    #[error("refinement requested with an empty error set")]
    EmptyErrors,
    #[error("prompt builder expects a {0} request")]
    WrongRequestKind(&'static str),
}

#[derive(Debug, Clone)]
pub enum RequestKind {
    /// Rendered `condition -> outcome` samples from the training split.
    Initial { examples: Vec<String> },
    Refinement { prev: Program, error_block: String },
}

#[derive(Debug, Clone)]
pub struct ProposalRequest {
    pub component: ComponentKind,
    pub schema: Arc<DomainSchema>,
    pub template_source: String,
    pub kind: RequestKind,
}

impl ProposalRequest {
    pub fn initial(component: ComponentKind, schema: Arc<DomainSchema>, examples: Vec<String>) -> Self {
        let template_source = prompts::function_template(component, &schema);
        ProposalRequest { component, schema, template_source, kind: RequestKind::Initial { examples } }
    }

    pub fn refinement(prev: Program, error_block: String) -> Self {
        let component = prev.kind();
        let schema = prev.schema().clone();
        let template_source = prompts::function_template(component, &schema);
        ProposalRequest { component, schema, template_source, kind: RequestKind::Refinement { prev, error_block } }
    }

    pub fn prompt(&self) -> Result<String, ProposeError> {
        match self.kind {
            RequestKind::Initial { .. } => build_initial_prompt(self),
            RequestKind::Refinement { .. } => build_refinement_prompt(self),
        }
    }
}

/// Source of candidate programs for the learner.
pub trait Proposer: Send + Sync {
    fn propose(&self, req: &ProposalRequest) -> Result<Program, ProposeError>;
}

/// Single-turn text completion.
pub trait Completer: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ProposeError>;
}

/// Parses the last fenced code block of `response`.
pub fn extract_program(response: &str, kind: ComponentKind, schema: Arc<DomainSchema>) -> Result<Program, ProposeError> {
    let block = code_blocks(response).pop().ok_or(ProposeError::NoCodeBlock)?;
    Ok(Program::parse(&block, kind, schema)?)
}

/// Prompt, complete, extract.
pub fn propose_via(c: &dyn Completer, req: &ProposalRequest) -> Result<Program, ProposeError> {
    let prompt = req.prompt()?;
    let response = c.complete(&prompt)?;
    extract_program(&response, req.component, req.schema.clone())
}
