use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{what}, line {line}: {msg}")]
    Parse { what: String, line: usize, msg: String },
    #[error("pair ids differ between predictions and ground truth: {0}")]
    IdMismatch(String),
    #[error(transparent)]
    Core(#[from] homgen_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(what: impl std::fmt::Display, line: usize, msg: impl std::fmt::Display) -> Self {
        Error::Parse {
            what: what.to_string(),
            line,
            msg: msg.to_string(),
        }
    }
}
