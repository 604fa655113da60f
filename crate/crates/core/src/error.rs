use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("token id {id} out of range for table of size {size}")]
    TokenOutOfRange { id: usize, size: usize },

    #[error("backward already run on this graph")]
    BackwardTwice,

    #[error("mode error: {0}")]
    Mode(String),

    #[error("corpus alignment error in document {doc}: source has {src} sentences, target has {tgt}")]
    Alignment { doc: usize, src: usize, tgt: usize },

    #[error("parse error in {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("training error: {0}")]
    Train(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |e| Error::Io(path, e)
    }
}
