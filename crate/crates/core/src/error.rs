use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One error type for the whole crate. Variants mirror how things actually
/// fail: shape disagreements, values outside a function's domain, API misuse,
/// bad configuration, unreadable input files, and training divergence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dim {
        context: String,
        expected: String,
        got: String,
    },

    /// A value outside the mathematical domain of an operation
    /// (non-positive stddev, probability outside [0,1], ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The API was called in an unsupported way (backward on a non-scalar,
    /// optimizer step with unpopulated gradients, duplicate parameter, ...).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input file could not be parsed; positions are 1-based and refer to the
    /// data as laid out on disk (row 1 = header).
    #[error("parse error in {path} at row {row}, column {col}: {msg}")]
    Parse {
        path: String,
        row: usize,
        col: usize,
        msg: String,
    },

    /// Training produced a non-finite loss or gradient.
    #[error("training error: {0}")]
    Training(String),

    /// A checkpoint file exists but its contents are not a valid checkpoint.
    #[error("bad checkpoint {path}: {msg}")]
    Checkpoint { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn dim(context: impl Into<String>, expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Dim {
            context: context.into(),
            expected: expected.into(),
            got: got.into(),
        }
    }
}
