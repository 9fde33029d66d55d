use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or sizes that cannot work together.
    #[error("configuration error: {0}")]
    Config(String),

    /// An API called out of order or with an argument outside its domain.
    #[error("usage error: {0}")]
    Usage(String),

    /// Reservoir construction could not produce a usable matrix.
    #[error("construction error: {0}")]
    Construction(String),

    /// A NaN or infinity showed up where training cannot continue.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
