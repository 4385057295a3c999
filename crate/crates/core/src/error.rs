use thiserror::Error;

/// Errors produced by the simulator.
///
/// Variants are grouped by the exit-code class the command-line front end maps
/// them to: validation, size caps, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),

    #[error("matrix is not unitary: max |U^dagger U - I| entry = {residual:e} (tolerance {tolerance:e})")]
    NotUnitary { residual: f64, tolerance: f64 },

    #[error("{what}: size {size} exceeds cap {cap}{}", hint.as_ref().map(|h| format!(" ({h})")).unwrap_or_default())]
    SizeLimit {
        what: &'static str,
        size: usize,
        cap: usize,
        hint: Option<String>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration mismatch: occupations sum to {got}, expected {expected}")]
    ConfigurationMismatch { expected: usize, got: usize },

    #[error("invalid noise parameter: {0}")]
    InvalidNoise(String),

    #[error("invalid cutoff policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid port subset: {0}")]
    InvalidSubset(String),

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("sample budget overflow: {0}")]
    BudgetOverflow(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn size(what: &'static str, size: usize, cap: usize) -> Self {
        Error::SizeLimit { what, size, cap, hint: None }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }

    /// Coarse classification used for process exit codes.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::SizeLimit { .. } | Error::BudgetOverflow(_) => ErrorClass::SizeCap,
            Error::Io(_) | Error::Csv(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    SizeCap,
    Io,
}

pub type Result<T> = std::result::Result<T, Error>;
