use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max |H_ij - conj(H_ji)| = {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("operator is not positive semidefinite: eigenvalue {min_eigenvalue:e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("state {index} has norm {norm}, expected 1")]
    NotNormalized { index: usize, norm: f64 },

    #[error("state {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("an ensemble needs at least 2 states, got {0}")]
    TooFewStates(usize),

    #[error("gram matrix diagonal entry {index} is {value}, expected 1")]
    GramDiagonal { index: usize, value: f64 },

    #[error("index {index} out of range for {count} states")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("probability {value:e} for state {index} lies outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed ensemble file: {0}")]
    Format(String),

    #[error("trajectory {trajectory} could not be completed after {attempts} attempts")]
    TrajectoryRejected { trajectory: u64, attempts: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
