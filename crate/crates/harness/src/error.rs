use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    ConfigParse(#[from] toml::de::Error),
    #[error("config rejected: {0}")]
    ConfigRejected(String),
    #[error("run {run}: {source}")]
    Numerical { run: usize, source: dkf_core::Error },
    #[error("setup failed: {0}")]
    Setup(#[source] dkf_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl HarnessError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::ConfigRead { .. } | HarnessError::ConfigParse(_) | HarnessError::ConfigRejected(_) => 2,
            HarnessError::Numerical { .. } | HarnessError::Setup(_) => 3,
            HarnessError::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
