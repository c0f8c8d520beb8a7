use std::io;
use std::path::{Path, PathBuf};

/// Failure of a command. I/O problems exit with 1, bad input or config
/// with 2.
#[derive(Debug, thiserror::Error)]
pub enum PodError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

impl PodError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PodError::Io { .. } => 1,
            PodError::Invalid(_) => 2,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        PodError::Invalid(msg.into())
    }
}

pub type Result<T, E = PodError> = std::result::Result<T, E>;

/// Attaches `path` to an I/O error.
pub fn io_at(path: &Path) -> impl FnOnce(io::Error) -> PodError + '_ {
    move |source| PodError::Io {
        path: path.to_path_buf(),
        source,
    }
}

macro_rules! invalid_from {
    ($($t:ty),*) => {
        $(impl From<$t> for PodError {
            fn from(e: $t) -> Self {
                PodError::Invalid(e.to_string())
            }
        })*
    };
}

invalid_from!(
    pod_core::games::GameError,
    pod_core::podgen::PodgenError,
    pod_core::nn::NnError,
    pod_core::generator::GenerationError,
    pod_core::tilemap::LevelError,
    serde_json::Error,
    pod_core::eval::EvalError,
    toml::de::Error
);
