use thiserror::Error;

/// Errors raised by the library surface.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied an argument outside the documented contract.
    #[error("usage error: {0}")]
    Usage(String),

    /// A coordinate fell outside the space-time box (beyond tolerance).
    #[error("domain error: point ({t}, {x}, {y}) lies outside the space-time box")]
    Domain { t: f64, x: f64, y: f64 },

    /// Boundary or field data is unusable (negative, non-finite, missing derivatives, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Geometry or bookkeeping inconsistency; indicates a bug.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn data(msg: impl Into<String>) -> Error {
    Error::Data(msg.into())
}
