use std::path::PathBuf;

use thiserror::Error;

/// Scenario failure, classified by the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerics failure during {stage}: {source}")]
    Numerics {
        stage: String,
        #[source]
        source: rotapol_core::Error,
    },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerics { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags core errors raised while building inputs as configuration errors.
pub trait ConfigContext<T> {
    fn config_ctx(self, what: &str) -> CliResult<T>;
}

impl<T> ConfigContext<T> for rotapol_core::Result<T> {
    fn config_ctx(self, what: &str) -> CliResult<T> {
        self.map_err(|e| CliError::Config(format!("{what}: {e}")))
    }
}

/// Tags core errors raised while running as numerics failures.
pub trait NumericsContext<T> {
    fn numerics(self, stage: &str) -> CliResult<T>;
}

impl<T> NumericsContext<T> for rotapol_core::Result<T> {
    fn numerics(self, stage: &str) -> CliResult<T> {
        self.map_err(|source| CliError::Numerics { stage: stage.to_string(), source })
    }
}
