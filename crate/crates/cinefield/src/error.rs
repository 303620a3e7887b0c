use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid error: {0}")]
    Grid(String),

    #[error("trajectory error: {0}")]
    Trajectory(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("network error: {0}")]
    Network(String),

    #[error("phantom error: {0}")]
    Phantom(String),

    #[error("forward model error: {0}")]
    Forward(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("metrics error: {0}")]
    Metrics(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn file(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::File {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
