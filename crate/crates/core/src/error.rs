use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("space dimension must be positive")]
    EmptySpace,

    #[error("metric is not Hermitian (relative defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive definite: eigenvalue {eigenvalue:.6e}")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("operator is not self-adjoint (relative defect {defect:.3e})")]
    NotSelfAdjoint { defect: f64 },

    #[error("operator is singular or ill-conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("vector {index} is not a unit vector (norm {norm:.12})")]
    NonUnit { index: usize, norm: f64 },

    #[error("pair {index} violates <phi, psi> = 1 (found {value})")]
    PairNormalization { index: usize, value: num_complex::Complex64 },

    #[error("requested index {requested} beyond realized length {realized}")]
    BeyondHorizon { requested: usize, realized: usize },

    #[error("row {row} of the system matrix is zero")]
    ZeroRow { row: usize },

    #[error("not a frame: smallest frame-operator eigenvalue {min_eigenvalue:.3e}")]
    NotAFrame { min_eigenvalue: f64 },

    #[error("family does not span the space (rank {rank} < dim {dim})")]
    NotSpanning { rank: usize, dim: usize },

    #[error("horizon {horizon} is smaller than the space dimension {dim}")]
    HorizonTooShort { horizon: usize, dim: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measure is not a probability measure (total mass {mass})")]
    NotProbability { mass: f64 },

    #[error("operation requires an atomic measure")]
    NotAtomic,

    #[error("Cantor level {level} exceeds the cap of 12 (4096 atoms)")]
    CantorLevel { level: u32 },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("resolution guard: {cells} cells cannot resolve frequency {max_frequency} (need cells >= 4*M)")]
    Resolution { cells: usize, max_frequency: usize },

    #[error("invalid seed vector: {0}")]
    InvalidSeed(String),

    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

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

pub type Result<T> = std::result::Result<T, Error>;
