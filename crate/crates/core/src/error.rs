use std::path::PathBuf;

use thiserror::Error;

use crate::expr::NodeId;

/// Errors raised anywhere in the discovery pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("variable `{0}` is referenced but not bound")]
    MissingVariable(String),

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("annotation refers to unknown node id {0}")]
    UnknownNodeId(NodeId),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("population is empty")]
    EmptyPopulation,

    #[error("baseline value for `{0}` is not finite")]
    NonFiniteBaseline(String),

    #[error("column `{0}` has no finite values")]
    EmptyColumn(String),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("no rows left after dropping rows with missing values")]
    EmptyAfterFiltering,

    #[error("invalid predicate: {0}")]
    InvalidPredicate(String),

    #[error("invalid expression: {0}")]
    InvalidExpression(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
