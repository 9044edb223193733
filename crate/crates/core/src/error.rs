use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the mapping pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("points {first} and {second} coincide")]
    DuplicatePoint { first: usize, second: usize },

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("neighbor count k = {k} out of range for {n} points")]
    KOutOfRange { k: usize, n: usize },

    #[error("neighborhood of point {0} is degenerate (rank < 2)")]
    DegenerateNeighborhood(usize),

    #[error("boundary chaining did not close: {0}")]
    BoundaryNotClosed(String),

    #[error("MLS stencil at point {index} is singular (condition {condition:.3e})")]
    SingularStencil { index: usize, condition: f64 },

    #[error("weight support radius must be positive")]
    ZeroSupport,

    #[error("Beltrami coefficient with |mu| = {0} is infeasible")]
    InfeasibleMu(f64),

    #[error("Jacobian estimate vanishes at point {0}")]
    DegenerateJacobian(usize),

    #[error("local ring of point {0} is degenerate")]
    DegenerateRing(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("linear system is singular (condition estimate {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("corners required")]
    MissingCorners,

    #[error("boundary required")]
    MissingBoundary,

    #[error("landmark at point {index} has target {target:?} outside the rectangle")]
    InfeasibleLandmark { index: usize, target: [f64; 2] },

    #[error("norm k = {0} outside [0, 1)")]
    NormOutOfRange(f64),

    #[error("distance matrix spectrum has no positive eigenvalue")]
    NegativeSpectrum,

    #[error("distance matrix is missing entries for pairs {0:?}")]
    MissingEntries(Vec<(usize, usize)>),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
