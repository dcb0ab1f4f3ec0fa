use std::path::PathBuf;

use crate::graph::NodeKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("edge ({u}, {v}) has invalid weight {weight}")]
    InvalidWeight { u: usize, v: usize, weight: f64 },

    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: usize, v: usize },

    #[error("self-loop on node {0} is not allowed here")]
    SelfLoop(usize),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: NodeKind, id: String },

    #[error("{path}:{line}: unknown {kind} id {id:?}")]
    UnknownId {
        path: String,
        line: usize,
        kind: NodeKind,
        id: String,
    },

    #[error("{0}")]
    EmptyGraph(&'static str),

    #[error("graph has {nodes} nodes, exhaustive search is capped at {cap}")]
    TooLarge { nodes: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("node universe mismatch: {0}")]
    Mismatch(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("internal check failed: {0}")]
    Assertion(String),

    #[error("{stage} stage: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures caused by the caller's input or configuration, as
    /// opposed to broken internal invariants.
    pub fn is_input_error(&self) -> bool {
        if let Error::Stage { source, .. } = self {
            return source.is_input_error();
        }
        !matches!(
            self,
            Error::Assertion(_)
                | Error::IndexOutOfRange { .. }
                | Error::InvalidWeight { .. }
                | Error::DuplicateEdge { .. }
                | Error::SelfLoop(_)
        )
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
