use thiserror::Error;

/// Errors produced by the elastica library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("curve has zero length")]
    ZeroLengthCurve,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("invalid reparametrization: {0}")]
    InvalidReparametrization(String),
    #[error("invalid lattice segment ({from:?}) -> ({to:?})")]
    InvalidSegment { from: (usize, usize), to: (usize, usize) },
    #[error("no admissible lattice path from (0,0) to (N,N); the strip is too narrow")]
    NoPath,
    #[error("cross-covariance is degenerate")]
    DegenerateCovariance,
    #[error("closure projection diverged after {iterations} iterations (residual {residual:e})")]
    ProjectionDiverged { iterations: usize, residual: f64 },
    #[error("matrix logarithm undefined: rotation angle pi")]
    LogUndefined,
    #[error("matrix is not a rotation (orthogonality defect {defect:e})")]
    NotARotation { defect: f64 },
    #[error("consecutive samples {index} and {} are antipodal", index + 1)]
    AntipodalStep { index: usize },
    #[error("sample {index} is antipodal to the reference point")]
    AntipodalReference { index: usize },
    #[error("parse error at line {line}{}: {message}", field.map(|f| format!(", field {f}")).unwrap_or_default())]
    Parse {
        line: usize,
        field: Option<usize>,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
