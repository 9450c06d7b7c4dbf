use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("selection is empty: {survivors} records survived the transmittance threshold")]
    EmptySelection { survivors: usize },

    #[error("no crossing of the target level in range (minimum value {min_value})")]
    OutOfRange { min_value: f64 },

    #[error("Fock cutoff is insufficient: tail mass {tail:e} exceeds tolerance")]
    CutoffInsufficient { tail: f64 },

    #[error("statistic is undefined: {0}")]
    UndefinedStatistic(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical guard tripped: {0}")]
    NumericalGuard(String),

    #[error("malformed data: {0}")]
    Parse(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
