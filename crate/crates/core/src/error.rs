use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("parameter `{name}` out of range: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// The Riesz kernel is singular at the origin.
    #[error("kernel evaluated at the origin")]
    SingularKernel,

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },

    /// Inconsistent configuration, keyed by the offending setting.
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("numerical blow-up at step {step}")]
    NumericalBlowup { step: usize },

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("picard iteration not contracting: distances {distances:?}")]
    NonContraction { distances: Vec<f64> },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { key: key.into(), reason: reason.into() }
    }

    pub fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter { name, reason: reason.into() }
    }

    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter { .. } => "parameter",
            Error::SingularKernel => "domain",
            Error::Validation(_) => "validation",
            Error::Index { .. } => "index",
            Error::Config { .. } => "config",
            Error::NumericalBlowup { .. } => "numerical_blowup",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::NonContraction { .. } => "non_contraction",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
