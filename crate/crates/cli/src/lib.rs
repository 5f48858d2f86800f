//! Stage-wise pipeline driver behind the `claimnet` binary.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod review;

pub use config::{load, LoadedConfig, PipelineConfig};
pub use pipeline::{run, Stage};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("stage `{stage}` needs output of stage `{needs}` ({path}); run `{needs}` first")]
    MissingPredecessor {
        stage: &'static str,
        needs: &'static str,
        path: String,
    },

    #[error(transparent)]
    Core(#[from] claimnet::Error),
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError::Validation(message.into())
    }

    /// 0 success, 1 validation, 2 missing predecessor, 3 provider transport.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::MissingPredecessor { .. } => 2,
            CliError::Core(claimnet::Error::Transport(_)) => 3,
            CliError::Core(_) => 1,
        }
    }
}
