use thiserror::Error;

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("label {label}, method {method}: {source}")]
    Cell {
        label: String,
        method: String,
        #[source]
        source: unidr::Error,
    },

    #[error("no cell for label {label} and method {method}")]
    MissingCell { label: String, method: String },

    #[error(transparent)]
    Core(#[from] unidr::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed report: {0}")]
    Report(String),
}

impl BenchError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        BenchError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, BenchError::Config { .. })
    }
}
