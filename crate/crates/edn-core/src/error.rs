use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps `Format`/`Io` to exit code 2 and everything else to 1.
#[derive(Debug, Error)]
pub enum EdnError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined metric: {0}")]
    Undefined(String),

    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl EdnError {
    pub fn dimension(msg: impl Into<String>) -> Self {
        EdnError::Dimension(msg.into())
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        EdnError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn format(offset: u64, reason: impl Into<String>) -> Self {
        EdnError::Format {
            offset,
            reason: reason.into(),
        }
    }

    /// Process exit code for the CLI: 2 for io/format problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            EdnError::Format { .. } | EdnError::Io(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, EdnError>;
