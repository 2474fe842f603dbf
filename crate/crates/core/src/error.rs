use std::path::{Path, PathBuf};

use thiserror::Error;

/// File-system and codec failures, always carrying the offending path.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("file not found: {}", path.display())]
    Missing { path: PathBuf },
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot decode {}: {message}", path.display())]
    Decode { path: PathBuf, message: String },
    #[error("cannot encode {}: {message}", path.display())]
    Encode { path: PathBuf, message: String },
}

impl IoError {
    pub fn read(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            IoError::Missing {
                path: path.to_path_buf(),
            }
        } else {
            IoError::Read {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    pub fn write(path: &Path, source: std::io::Error) -> Self {
        IoError::Write {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn decode(path: &Path, message: impl ToString) -> Self {
        let message = message.to_string();
        // image::open reports a missing file as a decode error
        if !path.exists() {
            return IoError::Missing {
                path: path.to_path_buf(),
            };
        }
        IoError::Decode {
            path: path.to_path_buf(),
            message,
        }
    }

    pub fn encode(path: &Path, message: impl ToString) -> Self {
        IoError::Encode {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|e| IoError::read(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::read(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    std::fs::write(path, bytes).map_err(|e| IoError::write(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<(), IoError> {
    std::fs::create_dir_all(path).map_err(|e| IoError::write(path, e))
}

/// Crate-wide error. Each variant wraps the owning module's error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
    #[error(transparent)]
    Pdg(#[from] crate::pdg::PdgError),
    #[error(transparent)]
    Document(#[from] crate::document::DocumentError),
    #[error(transparent)]
    Scene(#[from] crate::scene::SceneError),
    #[error(transparent)]
    Motion(#[from] crate::motion::MotionError),
    #[error(transparent)]
    Latent(#[from] crate::latent::LatentError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}

impl Error {
    /// True when the root cause is a file-system or codec failure rather than
    /// invalid content.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Tensor(e) => e.is_io(),
            Error::Document(e) => e.is_io(),
            Error::Scene(e) => e.is_io(),
            Error::Latent(e) => e.is_io(),
            Error::Metrics(e) => e.is_io(),
            _ => false,
        }
    }
}
