use std::path::PathBuf;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh construction failed: {0}")]
    Mesh(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("singular {what}: pivot {pivot:.3e} at scale {scale:.3e}")]
    Singular { what: String, pivot: f64, scale: f64 },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
