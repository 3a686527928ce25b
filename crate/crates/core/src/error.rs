use thiserror::Error;

/// Errors produced by the dp-VQD engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("width mismatch: expected {expected} qubits, got {found}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("wire {wire} out of range for {n_qubits}-qubit circuit")]
    WireOutOfRange { wire: usize, n_qubits: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("unbound symbols: {}", .0.join(", "))]
    UnboundSymbols(Vec<String>),

    #[error("unknown symbols: {}", .0.join(", "))]
    UnknownSymbols(Vec<String>),

    #[error("boundary {boundary} out of range for {n_qubits} qubits (need 0 < b < n)")]
    BoundaryOutOfRange { boundary: usize, n_qubits: usize },

    #[error("cut on wire {wire} at position {position} is out of range")]
    CutOutOfRange { wire: usize, position: usize },

    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("{count} cuts requested, limit is {limit}")]
    TooManyCuts { count: usize, limit: usize },

    #[error("missing result for fragment {fragment} variant {variant}")]
    MissingVariant { fragment: usize, variant: String },

    #[error("slice boundary {slice} is not supported by the ansatz (supported: {supported:?})")]
    BoundaryMismatch { slice: usize, supported: Vec<usize> },

    #[error("{n_qubits} qubits exceeds the limit of {limit} for this operation")]
    TooLarge { n_qubits: usize, limit: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
