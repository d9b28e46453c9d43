use thiserror::Error;

/// Errors raised by the evaluation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("pivot {modulus:e} below the pivot floor")]
    PivotZero { modulus: f64 },

    #[error("1 + row sum of row {row} has modulus {modulus:e}")]
    RowSumPole { row: usize, modulus: f64 },

    #[error("phase {index} has modulus {modulus}, expected 1")]
    NonUnitPhase { index: usize, modulus: f64 },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("gate violated: |A - 1| = {norm} is not below 1/k = {threshold}")]
    GateViolation { norm: f64, threshold: f64 },

    #[error("|w_{row}| = {modulus:e} at a quadrature node")]
    NearPole { row: usize, modulus: f64 },

    #[error("{required} evaluations exceed the budget of {budget}")]
    CostGuard { required: u128, budget: u64 },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable name used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMatrix(_) => "InvalidMatrix",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::PivotZero { .. } => "PivotZero",
            Error::RowSumPole { .. } => "RowSumPole",
            Error::NonUnitPhase { .. } => "NonUnitPhase",
            Error::DomainViolation(_) => "DomainViolation",
            Error::GateViolation { .. } => "GateViolation",
            Error::NearPole { .. } => "NearPole",
            Error::CostGuard { .. } => "CostGuard",
            Error::Parse(_) => "Parse",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
