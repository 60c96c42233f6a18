//! File formats, JSON reports, benchmark harnesses and the command-line
//! front end for [`cpnet_core`].

pub mod harness;
pub mod io;
pub mod report;

use std::path::PathBuf;

pub use cpnet_core as core;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{}: {msg}", path.display())]
    Invalid { path: PathBuf, msg: String },
    #[error("{}: file has no data lines", path.display())]
    Empty { path: PathBuf },
    #[error(transparent)]
    Model(#[from] cpnet_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn invalid(path: &std::path::Path, msg: impl Into<String>) -> Self {
        Error::Invalid { path: path.to_path_buf(), msg: msg.into() }
    }

    pub(crate) fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
