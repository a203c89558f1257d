use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("instance too large: {n} vertices exceeds the exhaustive bound of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("invalid catalyst subset {subset:?}: {reason}")]
    InvalidSubset { subset: Vec<usize>, reason: String },

    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("partitions overlap on vertex {0}")]
    Overlap(usize),

    #[error("eigensolver did not converge after {iterations} iterations (residuals {residuals:?})")]
    NoConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("nonpositive gap {gap} at L = {size}")]
    NonpositiveGap { size: usize, gap: f64 },

    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("target state {index} is degenerate (relative gap {relative_gap:e})")]
    DegenerateTarget { index: usize, relative_gap: f64 },

    #[error("wrong shape: {0}")]
    WrongShape(String),

    #[error("invalid order: W_1 = {w1} must be strictly below W_2 = {w2}")]
    InvalidOrder { w1: f64, w2: f64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 3 for solver failures, 2 for everything
    /// caused by bad input, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoConvergence { .. } => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
