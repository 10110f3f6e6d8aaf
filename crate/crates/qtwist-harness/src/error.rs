use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] qtwist::Error),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit code: 2 domain, 3 accuracy, 4 solver, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use qtwist::Error as E;
        match self {
            Self::Core(E::Domain(_) | E::Branch(_)) => 2,
            Self::Core(E::Accuracy { .. } | E::Precision { .. }) => 3,
            Self::Core(E::Solver(_) | E::Degenerate(_)) => 4,
            Self::Fit(_) => 4,
            _ => 1,
        }
    }
}
