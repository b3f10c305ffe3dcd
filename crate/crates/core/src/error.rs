use thiserror::Error;

/// Errors raised by the library. Each variant has a stable, machine-readable code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyData,
    #[error("confusion matrix outside metric domain: {0}")]
    MetricDomain(String),
    #[error("karmic sensitivity is not positive ({0})")]
    NonKarmicPoint(f64),
    #[error("no valid interior threshold: {0}")]
    DegenerateDistribution(String),
    #[error("H has constant sign on the search interval")]
    NoSignChange,
    #[error("{0} atoms exceed the enumeration cap of {1}")]
    TooManyAtoms(usize, usize),
    #[error("logistic fit diverged (weight norm {0:.3e}); data look separable")]
    SeparableData(f64),
    #[error("design matrix is rank deficient")]
    DegenerateDesign,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("population confusion requires a threshold strictly inside (0, 1), got {0}")]
    BoundaryThreshold(f64),
    #[error("fewer than 3 grid points carry neighbourhood mass")]
    InsufficientMass,
    #[error("could not find a split with both labels in each half after {0} attempts")]
    SplitDegenerate(usize),
    #[error("evaluation mode unsupported: {0}")]
    ModeUnsupported(String),
    #[error("need at least 3 sample sizes with positive median regret, got {0}")]
    InsufficientPoints(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyData => "empty-data",
            Error::MetricDomain(_) => "metric-domain",
            Error::NonKarmicPoint(_) => "non-karmic-point",
            Error::DegenerateDistribution(_) => "degenerate-distribution",
            Error::NoSignChange => "no-sign-change",
            Error::TooManyAtoms(..) => "too-many-atoms",
            Error::SeparableData(_) => "separable-data",
            Error::DegenerateDesign => "degenerate-design",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::BoundaryThreshold(_) => "boundary-threshold",
            Error::InsufficientMass => "insufficient-mass",
            Error::SplitDegenerate(_) => "split-degenerate",
            Error::ModeUnsupported(_) => "mode-unsupported",
            Error::InsufficientPoints(_) => "insufficient-points",
            Error::InvalidInput(_) => "invalid-input",
            Error::Parse(_) => "parse-error",
            Error::Io(_) => "io-error",
            Error::Csv(_) => "csv-error",
            Error::Json(_) => "json-error",
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                _ => unreachable!(),
            }
        } else {
            Error::Csv(e)
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
