use thiserror::Error;

use crate::identify::NonIdentified;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("duplicate edge {0}")]
    DuplicateEdge(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("directed cycle: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("vertex sets overlap on `{0}`")]
    OverlappingSets(String),
    #[error("graph has bidirected edges; a DAG is required")]
    HasBidirected,
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("child `{0}` is not covered by any component")]
    UncoveredChild(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("edge-inconsistent query: recanting witness `{witness}`")]
    EdgeInconsistent { witness: String, all: Vec<String> },
    #[error("not identified: {0}")]
    NotIdentified(NonIdentified),
    #[error("conditioning event has probability zero: {0}")]
    ZeroConditioning(String),
    #[error("variable `{0}` missing from table")]
    MissingVariable(String),
    #[error("unbound variable `{0}` in estimand")]
    Unbound(String),
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("variable `{0}` is not binary")]
    NotBinary(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("perturbation too large: {0}")]
    EpsilonTooLarge(String),
    #[error("enumeration of {size} configurations exceeds cap {cap}")]
    EnumerationCap { size: u128, cap: u128 },
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { file: "<input>".into(), line, msg: msg.into() }
    }

    /// Attach a file name to a parse error.
    pub fn in_file(self, name: &str) -> Self {
        match self {
            Error::Parse { line, msg, .. } => Error::Parse { file: name.to_string(), line, msg },
            other => other,
        }
    }
}
