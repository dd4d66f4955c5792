use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mass matrix: {0}")]
    InvalidMassMatrix(String),
    #[error("modal analysis failed: {0}")]
    ModalAnalysisFailed(String),
    #[error("singular at frequency {0} Hz")]
    SingularAtFrequency(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("total damage not representable: d = {0}")]
    TotalDamage(f64),
    #[error("insufficient samples for class {0}")]
    InsufficientSamples(String),
    #[error("degenerate feature '{0}': zero variance")]
    DegenerateFeature(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown label '{0}'")]
    UnknownLabel(String),
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
