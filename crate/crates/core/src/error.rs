use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid system shape: {0}")]
    InvalidShape(String),

    #[error("party index {index} out of range for {parties} parties")]
    PartyIndex { index: usize, parties: usize },

    #[error("row parties must form a nonempty proper subset of the {parties} parties")]
    InvalidBipartition { parties: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("not decomposable: party {party} has realignment residual {residual:e}")]
    NotDecomposable { party: usize, residual: f64 },

    #[error("matrix is not invertible (smallest singular value {0:e})")]
    NotInvertible(f64),

    #[error("factor {0} of the witness is singular")]
    SingularFactor(usize),

    #[error("invalid pure state: {0}")]
    InvalidPureState(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("spectral supports differ: rank {left} vs {right}")]
    RankMismatch { left: usize, right: usize },

    #[error("pipeline requires {expected} parties, got {actual}")]
    PartyCount { expected: usize, actual: usize },

    #[error("fixture parameters rejected: {0}")]
    FixtureParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
