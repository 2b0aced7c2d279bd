//! Error type shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TriwaveError {
    /// A value violated a mathematical precondition (negative quantum number,
    /// s < 2, non-unitary target, invalid density matrix, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Array dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// An index fell outside the basis range.
    #[error("index error: {0}")]
    Index(String),

    /// A configuration document is missing a field or violates a model
    /// invariant. `field` is the path of the offending entry.
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    /// The numerics produced a non-finite quantity or an iteration failed to
    /// converge where convergence is required.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl TriwaveError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        TriwaveError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 2 for configuration / usage problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            TriwaveError::Numerical(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, TriwaveError>;
