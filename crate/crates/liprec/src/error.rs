use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid problem file at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid override `{0}`: expected key=value")]
    Override(String),
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error(transparent)]
    Core(#[from] liprec_core::Error),
}

impl CliError {
    pub fn problem(msg: impl Into<String>) -> Self {
        CliError::Problem(msg.into())
    }
}

impl CliError {
    /// Error class name printed ahead of the message.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Read { .. } | CliError::Write { .. } => "IoError",
            CliError::Json(_) | CliError::Schema { .. } => "ParseError",
            CliError::Override(_) => "OverrideError",
            CliError::Problem(_) => "ProblemError",
            CliError::Core(e) => e.kind(),
        }
    }
}
