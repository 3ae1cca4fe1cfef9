use std::io;

use thiserror::Error;

/// Errors surfaced by dataset loading, tree construction and queries.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("duplicate points: rows {a} and {b} coincide")]
    DuplicatePoint { a: usize, b: usize },

    #[error("point id {0} out of range")]
    InvalidPointId(usize),

    #[error("unsupported metric `{0}` (expected euclidean, manhattan or chebyshev)")]
    UnsupportedMetric(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
