use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {point:?} lies outside the admissible region: {reason}")]
    OutOfDomain { point: Vec<f64>, reason: String },

    #[error("quadrature did not converge: estimated error {error:e} after {intervals} intervals")]
    QuadratureNotConverged { error: f64, intervals: usize },

    #[error("meshing failed near {location:?}: {reason}")]
    Meshing { location: [f64; 2], reason: String },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("mesh mismatch: fields live on different meshes")]
    MeshMismatch,

    #[error("point location failed for {0:?}")]
    PointLocation([f64; 2]),

    #[error("system is not positive definite: {0}")]
    Indefinite(String),

    #[error("fit rejected for {entry}: {reason}")]
    FitRejected { entry: String, reason: String },

    #[error("entry {0} diverges as the gap closes in two dimensions; it has no starred limit")]
    DivergentEntry(String),

    #[error("theorem hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
