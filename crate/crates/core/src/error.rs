use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("samples are defined on different grids")]
    GridMismatch,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("singular evaluation point t = {0}")]
    Singularity(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("invalid field parameters: {0}")]
    InvalidField(String),

    #[error("measure has empty support")]
    EmptySupport,

    #[error("constant F must be finite, got {0}")]
    NonFiniteConstant(f64),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
