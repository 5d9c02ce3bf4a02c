use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the explanation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("node id {id} out of bounds (node_count = {node_count})")]
    Bounds { id: usize, node_count: usize },

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("node {node} has {n} sample node(s) in its neighborhood; at least 2 are required")]
    InsufficientNeighbors { node: usize, n: usize },

    #[error("degenerate problem: {0}")]
    DegenerateProblem(String),

    #[error("degenerate surrogate fit: {0}")]
    DegenerateFit(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("model format error: {0}")]
    Format(String),

    #[error("graph has no labels")]
    MissingLabels,

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Training { epoch: usize, loss: f64 },

    #[error("accuracy gate unmet after {attempts} attempt(s): {detail}")]
    GateUnmet { attempts: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
