use thiserror::Error;

/// Errors produced by the lqdim library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured budget (word count, time) would be exceeded.
    #[error("resource limit: {what} (largest level that fits: {fits:?})")]
    Resource { what: String, fits: Option<u32> },

    /// A constructed or supplied object failed one of its invariants.
    #[error("invariant violated: {invariant}: {witness}")]
    Invariant { invariant: String, witness: String },

    /// An IFS description violates one of the system axioms.
    #[error("invalid system: `{field}`: {message}")]
    InvalidSpec { field: String, message: String },

    /// Malformed input file; `field` names the offending entry.
    #[error("parse error in `{field}`: {message}")]
    Parse { field: String, message: String },

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
