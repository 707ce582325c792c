use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("energy form is not positive definite (eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("word budget exceeded: {requested} words requested, cap is {cap}")]
    BudgetExceeded { requested: u128, cap: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cylinder has zero measure")]
    ZeroMeasure,

    #[error("operation requires symmetric restriction maps")]
    NotSymmetric,

    #[error("system failed validation: {0}")]
    Invalid(String),

    #[error("exact arithmetic unavailable: {0}")]
    Inexact(String),

    #[error("Perron eigenproblem failed: {0}")]
    Perron(String),

    #[error("irreducibility constant is zero")]
    Reducible,

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
