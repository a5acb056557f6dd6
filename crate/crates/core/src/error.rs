use thiserror::Error;

use crate::model::ColumnKind;

/// Errors raised by tactics, the pipeline front end and the executor.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no values")]
    NoValues,

    #[error("column `{0}` not found")]
    UnknownColumn(String),

    #[error("column `{column}` has kind {actual:?}, expected {expected}")]
    ColumnKind {
        column: String,
        expected: &'static str,
        actual: ColumnKind,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("representation kind mismatch: expected {expected}, found {found}")]
    RepresentationKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("invalid table: {0}")]
    Table(String),

    #[error("unmapped values with no default group: {}", .0.join(", "))]
    Unmapped(Vec<String>),

    #[error("design matrix is rank deficient: `{column}` is collinear with {}", .with.join(", "))]
    RankDeficient { column: String, with: Vec<String> },

    #[error("expression error: {0}")]
    Expression(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("pipeline error: {0}")]
    Pipeline(String),

    #[error("duplicate node id `{0}`")]
    DuplicateId(String),

    #[error("node `{node}`: unknown op `{op}`")]
    UnknownOp { node: String, op: String },

    #[error("reference to unknown node `{0}`")]
    UnknownNode(String),

    #[error("graph has a cycle through {}", .0.join(", "))]
    Cycle(Vec<String>),

    #[error("invalid pipeline: {}", .0.join("; "))]
    Invalid(Vec<String>),

    #[error("unbound source table `{0}`")]
    Unbound(String),

    #[error("node `{node}`: {source}")]
    Node {
        node: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn at_node(self, node: &str) -> Self {
        Error::Node {
            node: node.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
