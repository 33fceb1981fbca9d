use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage `{stage}`{}: {message}", sample.map(|s| format!(" (sample {s})")).unwrap_or_default())]
    Stage {
        stage: &'static str,
        sample: Option<usize>,
        message: String,
    },
    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub(crate) fn stage(stage: &'static str, message: impl ToString) -> Self {
        Self::Stage {
            stage,
            sample: None,
            message: message.to_string(),
        }
    }

    pub(crate) fn sample(stage: &'static str, sample: usize, message: impl ToString) -> Self {
        Self::Stage {
            stage,
            sample: Some(sample),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;
