use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("singular value decomposition did not converge")]
    SvdFailed,

    #[error("backward error {residual:e} exceeds tolerance {tol:e}")]
    Inaccurate { residual: f64, tol: f64 },

    #[error("malformed block partition: {0}")]
    Partition(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("unsupported scenario: {0}")]
    Unsupported(String),

    #[error("theta = {0} is too close to an integer (pole of the summand)")]
    Pole(f64),

    #[error("enumeration of {0} local deterministic boxes exceeds the guard")]
    EnumerationGuard(u128),

    #[error("invalid weights: {0}")]
    Weights(String),

    #[error("invalid permutation: {0}")]
    Permutation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
