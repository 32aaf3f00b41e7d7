use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({u}, {v}) references node {node} but the graph has {n} nodes")]
    NodeOutOfRange {
        u: usize,
        v: usize,
        node: usize,
        n: usize,
    },

    #[error("graph has no edges; modularity is undefined when M = 0")]
    EmptyEdgeSet,

    #[error("feature matrix must have at least one column")]
    NoFeatures,

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("no structural communities above threshold (T = {threshold:.4})")]
    NoCommunities { threshold: f64 },

    #[error("structural community {index} has no members")]
    EmptyCommunity { index: usize },

    #[error("degenerate center: community {index} has a zero-norm center under cosine similarity")]
    DegenerateCenter { index: usize },

    #[error("membership matrix row {row} sums to {sum}, not 1")]
    NotRowStochastic { row: usize, sum: f64 },

    #[error("metric needs at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("non-finite {what} at iteration {iteration}: {snapshot}")]
    NonFinite {
        what: &'static str,
        iteration: usize,
        snapshot: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite { .. } => 3,
            Error::InvalidConfig(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
