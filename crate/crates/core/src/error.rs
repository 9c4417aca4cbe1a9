use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("anchor index {m} out of range for dimension {d}")]
    AnchorOutOfRange { m: usize, d: usize },

    #[error("invalid variogram: {0}")]
    InvalidVariogram(String),

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("matrix is not strictly upper triangular: entry ({row}, {col}) = {value}")]
    NotStrictlyUpper { row: usize, col: usize, value: f64 },

    #[error("theta is not symmetric with zero row sums (max violation {violation:e})")]
    NotZeroRowSum { violation: f64 },

    #[error("singular or ill-conditioned block with anchor m={m} (condition estimate {condition:e})")]
    Singular { m: usize, condition: f64 },

    #[error("coordinate {index} of the point is not positive ({value})")]
    NonPositiveCoordinate { index: usize, value: f64 },

    #[error("empty sample batch")]
    EmptyBatch,

    #[error("sampler exceeded {cap} proposals without acceptance")]
    IterationCap { cap: u64 },

    #[error("no threshold exceedances among {n} rows at threshold {threshold}")]
    NoExceedances { n: usize, threshold: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error in {path} at row {row}, column {col}: {msg}")]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
