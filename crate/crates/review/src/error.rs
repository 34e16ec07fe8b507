use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] dezh_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file} line {line} is corrupt: {reason}")]
    CorruptLine {
        file: &'static str,
        line: usize,
        reason: String,
    },
    #[error("candidate refers to unknown sentence {0}")]
    UnknownSentence(String),
    #[error("unknown candidate {key}{}", line.map(|l| format!(" (decisions line {l})")).unwrap_or_default())]
    UnknownCandidate { key: String, line: Option<usize> },
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
