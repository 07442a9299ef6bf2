use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("enumeration too large: round {round} would hold {atoms} atoms (cap {cap})")]
    EnumerationTooLarge { round: usize, atoms: u128, cap: usize },

    #[error("row kernel is not declared exchangeable; use the two-coordinate variant instead")]
    NotExchangeable,

    #[error("infeasible (C, eta) = ({c}, {eta}): e^(2 eta) + e^(-2 eta (C+1)) - 2 = {residual:e} > 0")]
    Infeasible { c: f64, eta: f64, residual: f64 },

    #[error("stopping rule is not predictable: {0}")]
    NotPredictable(String),

    #[error("schedule violation at round {round}: {reason}")]
    Schedule { round: usize, reason: String },

    #[error("search cap exceeded: {0}")]
    CapExceeded(String),

    #[error("exact rational arithmetic is not available for {0}")]
    ExactUnsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
