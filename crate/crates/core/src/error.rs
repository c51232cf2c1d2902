use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("group `{0}` is not in the declared group universe")]
    UnknownGroup(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("single-class input: {0}")]
    SingleClass(String),

    #[error("rates undefined for group `{0}` (no positives or no negatives)")]
    UndefinedRates(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate word `{0}`: vector lies inside the bias subspace")]
    DegenerateWord(String),

    #[error("degenerate equality-set member `{0}`: no in-subspace distinction from the set mean")]
    DegenerateMember(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient rank: requested {requested} directions but residual rank is {rank}")]
    InsufficientRank { requested: usize, rank: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable category, one per failure family.
    pub fn category(&self) -> &'static str {
        match self {
            Error::EmptyInput(_) => "empty-input",
            Error::UnknownGroup(_)
            | Error::InvalidInput(_)
            | Error::SingleClass(_)
            | Error::UndefinedRates(_)
            | Error::DimensionMismatch { .. } => "invalid-input",
            Error::DegenerateWord(_)
            | Error::DegenerateMember(_)
            | Error::Degenerate(_)
            | Error::InsufficientRank { .. } => "degenerate",
            Error::NotConverged { .. } => "numerical",
            Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
