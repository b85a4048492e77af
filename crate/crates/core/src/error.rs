use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition (shape, range, sign).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value in layer {layer}")]
    Numerical { layer: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver error: {0}")]
    Solver(String),

    /// Big-M construction produced a non-finite constant.
    #[error("MIP construction failed: {0}")]
    Construction(String),

    #[error("grid of {points} points exceeds the {limit} point limit")]
    GridTooLarge { points: u128, limit: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
