use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid annulus: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("reflection normal must be nonzero")]
    ZeroNormal,

    #[error("invalid mesh parameters: {0}")]
    InvalidMeshParams(String),

    #[error("offset s = {s} outside the contained range [0, {limit})")]
    OffsetOutOfRange { s: f64, limit: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("field has {got} values but the mesh has {expected} vertices")]
    FieldSize { expected: usize, got: usize },

    #[error("Rayleigh quotient undefined: zero denominator")]
    ZeroDenominator,

    #[error("linear solve failed: matrix not positive definite at row {0}")]
    NotPositiveDefinite(usize),

    #[error("eigenvalue bracket not found below {0:e}")]
    BracketNotFound(f64),

    #[error("radial integration blew up at r = {0}")]
    IntegrationBlowUp(f64),

    #[error("boundary edge ({0}, {1}) has no adjacent triangle")]
    OrphanEdge(usize, usize),

    #[error("eigenpair did not converge")]
    NotConverged,

    #[error("invalid experiment input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
