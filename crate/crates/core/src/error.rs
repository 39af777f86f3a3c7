use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("subsequence out of bounds: {0}")]
    OutOfBounds(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("no training instance satisfies the unlike-neighbor filter")]
    NoUnlikeNeighbor,

    #[error("class {0} has no training instances")]
    EmptyClass(usize),

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("bridge protocol error: {0}")]
    BridgeProtocol(String),

    #[error("bridge timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("unknown model type `{0}`")]
    UnknownModelType(String),

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u64 },

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error("population has not been ranked")]
    MissingRanks,

    #[error("the Pareto front is empty")]
    EmptyFront,

    #[error("no valid counterfactual found (even the full substitution is not classified as the target)")]
    NoValidSolution,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
