use thiserror::Error;

/// Errors raised by the model kernel, the embedder and the evaluation harnesses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("birth index {index} is below the minimum {min}")]
    InvalidIndex { index: f64, min: f64 },

    #[error("temperature {0} is outside [0, 1); the connection radius is undefined there")]
    TemperatureOutOfRange(f64),

    #[error("embedding does not match the graph: {0}")]
    Mismatch(String),

    #[error("AUC is undefined: {missing} missing and {nonexistent} nonexistent pairs in the stratum")]
    UndefinedAuc { missing: u64, nonexistent: u64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier, used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidIndex { .. } => "invalid_index",
            Error::TemperatureOutOfRange(_) => "temperature_out_of_range",
            Error::Mismatch(_) => "mismatch",
            Error::UndefinedAuc { .. } => "undefined_auc",
            Error::Parse { .. } => "parse",
            Error::EmptyInput(_) => "empty_input",
            Error::Io(_) | Error::File { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
