use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Config { path: String, line: usize, column: usize, message: String },

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] markovia_core::Error),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}
