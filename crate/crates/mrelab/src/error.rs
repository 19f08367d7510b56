use std::path::PathBuf;

use thiserror::Error;

/// Problems with a scenario file or its values. `path` is the dotted key.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("scenario is empty")]
    Empty,
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error("no scenario named `{0}`")]
    UnknownScenario(String),
    #[error("bad sweep axis `{0}`, expected key=v1,v2,...")]
    BadAxis(String),
}

impl ConfigError {
    pub fn invalid(path: &str, msg: impl Into<String>) -> Self {
        ConfigError::Invalid { path: path.to_string(), msg: msg.into() }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Core { context: String, source: mrelab_core::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: bad snapshot: {msg}")]
    Snapshot { path: PathBuf, msg: String },
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Attaches a description of the failing step to core errors.
pub trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T>;
}

impl<T> Context<T> for std::result::Result<T, mrelab_core::Error> {
    fn context(self, what: impl Into<String>) -> Result<T> {
        self.map_err(|source| HarnessError::Core { context: what.into(), source })
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
