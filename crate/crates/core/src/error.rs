use thiserror::Error;

/// Coarse failure classes; the CLI maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("session validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("anchor class `{0}` has no frames in session")]
    AnchorMissing(String),
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),
    #[error("degenerate model: {0}")]
    DegenerateModel(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("fold leakage: {0}")]
    Leakage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config { .. } => ErrorCategory::Config,
            Error::Domain(_)
            | Error::DegenerateScale(_)
            | Error::DegenerateModel(_)
            | Error::Training(_) => ErrorCategory::Numerical,
            _ => ErrorCategory::Data,
        }
    }

    /// Short machine-readable tag used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Schema(_) => "schema",
            Error::Config { .. } => "config",
            Error::Parse { .. } => "parse",
            Error::Format(_) => "format",
            Error::Validation(_) => "validation",
            Error::AnchorMissing(_) => "anchor_missing",
            Error::DegenerateScale(_) => "degenerate_scale",
            Error::DegenerateModel(_) => "degenerate_model",
            Error::Training(_) => "training",
            Error::Alignment(_) => "alignment",
            Error::Leakage(_) => "leakage",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
