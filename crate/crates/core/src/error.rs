use thiserror::Error;

/// Errors raised by the laboratory operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("enumeration of {required} points exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degree {0} monomial rejected (cubic polynomials only)")]
    DegreeTooHigh(usize),

    #[error("n = {n} is outside the range of the lifting lemma (needs n >= {min})")]
    OutOfRange { n: usize, min: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("construction failed: {0}")]
    Construction(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

/// Guard an enumeration of `required` points against `budget`.
pub(crate) fn check_budget(required: u128, budget: u64) -> Result<()> {
    if required > budget as u128 {
        Err(LabError::BudgetExceeded { required, budget })
    } else {
        Ok(())
    }
}
