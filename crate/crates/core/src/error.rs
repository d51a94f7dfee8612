use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot remove edge ({0}, {1}): multiplicity would become negative")]
    EdgeUnderflow(usize, usize),
    #[error("simple graph cannot hold edge ({0}, {1}) with multiplicity {2}")]
    SimpleGraphViolation(usize, usize, u32),
    #[error("node {node} out of range for a graph of {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("graph has {actual} edges but the prior expects {expected}")]
    EdgeCountMismatch { expected: u64, actual: u64 },
    #[error("degree sequence of the graph does not match the prior's")]
    DegreeMismatch,
    #[error("partition has an empty block")]
    EmptyBlock,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("no legal move: {0}")]
    NoLegalMove(&'static str),
    #[error("state space too large to enumerate: {0}")]
    TooLarge(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("undefined quantity: {0}")]
    Undefined(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
