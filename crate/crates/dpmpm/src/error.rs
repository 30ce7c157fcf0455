use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by where the fault lies so the CLI can map them onto
/// exit codes: bad settings exit 2, bad data (including unreadable or
/// malformed files) exit 3.
#[derive(Debug, Error)]
pub enum Error {
    /// A file does not parse: ragged rows, bad headers, malformed JSON.
    #[error("format error: {0}")]
    Format(String),
    /// Variables and levels are inconsistent with each other or with a schema.
    #[error("schema error: {0}")]
    Schema(String),
    /// The requested settings are unusable regardless of the data.
    #[error("configuration error: {0}")]
    Config(String),
    /// The data cannot be processed under the requested model.
    #[error("data error: {0}")]
    Data(String),
    /// A numerical state that should be unreachable.
    #[error("internal error: {0}")]
    Internal(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code the CLI uses for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::Internal(_) => 1,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
