use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Validation(String),

    #[error("profile {profile:?} has no {space} vector")]
    MissingSpace { profile: String, space: String },

    #[error("{what} is empty")]
    Empty { what: String },

    #[error(transparent)]
    Core(#[from] needscope_core::CoreError),

    #[error(transparent)]
    Features(#[from] needscope_features::FeatureError),

    #[error(transparent)]
    Glocal(#[from] needscope_glocal::GlocalError),

    #[error(transparent)]
    Metrics(#[from] needscope_metrics::MetricsError),

    #[error("malformed {what}: {message}")]
    Format { what: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub fn format(what: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Format { what: what.into(), message: message.into() }
    }

    /// 1 for bad input (configuration, dataset validation), 2 for failures
    /// while running.
    pub fn exit_code(&self) -> i32 {
        use needscope_core::CoreError as C;
        match self {
            HarnessError::Config(_)
            | HarnessError::Validation(_)
            | HarnessError::MissingSpace { .. }
            | HarnessError::Toml { .. }
            | HarnessError::Format { .. } => 1,
            HarnessError::Core(e) => match e {
                C::Io { .. } | C::Image { .. } => 2,
                _ => 1,
            },
            _ => 2,
        }
    }
}
