use thiserror::Error;

/// Errors surfaced by the clustering library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("object {id}: {reason}")]
    InvalidObject { id: String, reason: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid ground metric: {0}")]
    InvalidMetric(String),

    #[error("infeasible marginals: {0}")]
    InfeasibleMarginals(String),

    #[error("LP solver failed after {pivots} pivots: {reason}")]
    LpFailure { pivots: usize, reason: String },

    #[error("requested {k} clusters from {n} objects")]
    TooManyClusters { k: usize, n: usize },

    #[error("super-dimension mismatch: {left} vs {right}")]
    SuperDimensionMismatch { left: usize, right: usize },

    #[error("segment {segment} at level {level} failed: {source}")]
    Worker {
        level: usize,
        segment: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("missing result for segment {0}")]
    MissingSegment(usize),

    #[error("label {label} out of range for {len} entries")]
    LabelOutOfRange { label: usize, len: usize },

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    /// True for failures of the LP machinery rather than of the inputs.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::LpFailure { .. } => true,
            Error::Worker { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
