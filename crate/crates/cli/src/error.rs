use std::process::ExitCode;

use proxydyn::document::DocumentError;
use proxydyn::latent::LatentError;
use proxydyn::metrics::MetricsError;
use proxydyn::motion::MotionError;
use proxydyn::scene::SceneError;
use proxydyn::tensor::TensorError;
use proxydyn::{Error as CoreError, IoError};

/// Failure class, which fixes the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    /// Bad input content: invalid graph, dimension mismatch, malformed file.
    Validation,
    /// A file could not be read or written.
    Io,
}

impl Failure {
    pub fn exit_code(self) -> u8 {
        match self {
            Failure::Validation => 1,
            Failure::Io => 2,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub failure: Failure,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            failure: Failure::Validation,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            failure: Failure::Io,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.failure.exit_code())
    }
}

macro_rules! classify {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                let failure = if e.is_io() { Failure::Io } else { Failure::Validation };
                Self { failure, message: e.to_string() }
            }
        }
    )*};
}

classify!(CoreError, DocumentError, LatentError, MetricsError, SceneError, TensorError);

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        Self::io(e.to_string())
    }
}

impl From<MotionError> for CliError {
    fn from(e: MotionError) -> Self {
        Self::validation(e.to_string())
    }
}
