use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A coefficient is undefined or the diffusion is not strictly positive.
    #[error("domain violation at x = {x}: {term}")]
    Domain { x: f64, term: String },

    /// A simulated path left the admissible region and retries were exhausted.
    #[error("path left the admissible region at fine step {step} (x = {x})")]
    PathExit { step: usize, x: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid reduction: {0}")]
    InvalidReduction(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("matrix is not positive definite (diagonal entry {index} = {value})")]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("no admissible starting point found")]
    NoAdmissibleStart,

    #[error("all {reps} replications failed")]
    AllFailed { reps: usize },

    #[error("degenerate sample: all {count} values equal {value}")]
    DegenerateSample { count: usize, value: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("irregular time grid at row {row}: spacing {spacing} differs from delta {delta}")]
    Grid { row: u64, spacing: f64, delta: f64 },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by bad input data rather than numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Grid { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::Precondition(_)
                | Error::Argument(_)
                | Error::Dimension { .. }
                | Error::UnknownModel(_)
                | Error::InvalidReduction(_)
        )
    }
}
