//! Gremlin subset: parser, validator, interpreter and complexity scorer.

pub mod ast;
pub mod catalog;
mod complexity;
mod interp;
mod parser;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ast::{AnonTraversal, Arg, Literal, Op, PredOp, Predicate, Source, SourceKind, Step, Traversal};
pub use catalog::{CatalogEntry, ExecClass, OPERATOR_CATALOG};
pub use complexity::{complexity, length_score, ComplexityReport, Tier};
pub use interp::{execute, ExecError, ExecutionLimits, ResultSet};
pub use parser::parse;
pub use validate::validate;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at offset {offset}: {message}")]
pub struct SyntaxError {
    /// Character offset into the script.
    pub offset: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        SyntaxError {
            offset,
            message: message.into(),
        }
    }

    pub fn to_issue(&self) -> ValidationIssue {
        ValidationIssue {
            kind: IssueKind::Syntax,
            location: 0,
            offset: Some(self.offset),
            message: self.message.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IssueKind {
    Syntax,
    UnknownLabel,
    UnknownProperty,
    WrongEdgeDirection,
    UnsupportedOperator,
    ArityError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub kind: IssueKind,
    /// Index of the offending top-level step (0 = first step after the source).
    pub location: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub offset: Option<usize>,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.offset {
            Some(o) => write!(f, "{:?} at offset {}: {}", self.kind, o, self.message),
            None => write!(f, "{:?} at step {}: {}", self.kind, self.location, self.message),
        }
    }
}

/// Parses and validates in one go. Syntax errors come back as a single issue.
pub fn check_script(script: &str, schema: &crate::graph::GraphSchema) -> Result<Traversal, Vec<ValidationIssue>> {
    let t = parse(script).map_err(|e| vec![e.to_issue()])?;
    let issues = validate(&t, schema);
    if issues.is_empty() {
        Ok(t)
    } else {
        Err(issues)
    }
}
