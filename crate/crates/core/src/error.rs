use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid quantum numbers: {0}")]
    InvalidQuantumNumbers(String),
    #[error("spin out of range: twice_s = {twice_s} exceeds the supported maximum {max}")]
    SpinOutOfRange { twice_s: u32, max: u32 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator is not Hermitian (residual {0:e})")]
    NotHermitian(f64),
    #[error("negative evolution time {0}: dynamical semigroups only run forward")]
    NegativeTime(f64),
    #[error("step too large: {0}")]
    StepTooLarge(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("insufficient time range: {0}")]
    InsufficientRange(String),
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical failure: {0}")]
    Computation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidQuantumNumbers(_) => "invalid_quantum_numbers",
            Error::SpinOutOfRange { .. } => "spin_out_of_range",
            Error::Degenerate(_) => "degenerate",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotHermitian(_) => "not_hermitian",
            Error::NegativeTime(_) => "negative_time",
            Error::StepTooLarge(_) => "step_too_large",
            Error::Unsupported(_) => "unsupported",
            Error::InvalidDensityMatrix(_) => "invalid_density_matrix",
            Error::InsufficientRange(_) => "insufficient_range",
            Error::Divergent(_) => "divergent",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Computation(_) => "computation",
        }
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Computation(_))
    }
}
