use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value at row {row} while evaluating `{feature}`")]
    NonFiniteOutput { row: usize, feature: String },
    #[error("feature depth {depth} exceeds the limit {max}")]
    DepthExceeded { depth: usize, max: usize },
    #[error("feature local width {width} exceeds the limit {max}")]
    WidthExceeded { width: usize, max: usize },
    #[error("projection weight fit failed: {0}")]
    AlphaFitFailed(String),
    #[error("design matrix is rank deficient (column {column})")]
    SingularDesign { column: usize },
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("likelihood is not finite")]
    NonFiniteLikelihood,
    #[error("model store is empty")]
    EmptyStore,
    #[error("enumeration limited to depth <= 2 and m <= 2 (got depth {depth}, m {m})")]
    ScaleGuard { depth: usize, m: usize },
    #[error("rate undefined: no `{0}` cases")]
    UndefinedRate(&'static str),
    #[error("correlation undefined for a constant vector")]
    DegenerateCorrelation,
    #[error("cannot evaluate feature `{feature}` at row {row}")]
    FeatureEvalFailure { row: usize, feature: String },
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse { row: usize, column: String, message: String },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("no rows left after dropping incomplete records")]
    EmptyAfterFiltering,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
