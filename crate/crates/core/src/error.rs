use thiserror::Error;

/// Errors raised by the design engine.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function or violates a type invariant.
    #[error("domain error: {0}")]
    Domain(String),

    /// A design or run configuration is inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The closed-form superiority sum needs integer Beta parameters.
    #[error("closed-form superiority sum requires integer parameters, got Beta({a1}, {b1}) vs Beta({a0}, {b0})")]
    NonIntegerParameters { a1: f64, b1: f64, a0: f64, b0: f64 },

    /// A numerical routine failed (singular matrix, non-finite values, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
