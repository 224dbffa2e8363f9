use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read config {path}: {message}")]
    ConfigRead { path: PathBuf, message: String },

    #[error("invalid config value for {field}: {message}")]
    Config { field: String, message: String },

    #[error("malformed field CSV: {0}")]
    MalformedField(String),

    #[error(transparent)]
    Solver(#[from] qaheat::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 1 for configuration and input problems.
    pub fn exit_code(&self) -> i32 {
        1
    }
}
