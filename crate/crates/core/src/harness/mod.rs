//! Episode batches, transcript replay, and demo validation: the plumbing
//! the command-line front end drives.

mod config;
mod metrics;
mod replay;
mod run;
mod validate;

pub use config::{apply_bug_patches, load_bug_patches, BugPatch, EnvKind, ProviderConfig, RunConfig};
pub use metrics::{EpisodeRow, MetricsReport};
pub use replay::{cmd_replay, first_difference, ReplayBundle, ReplayReport};
pub use run::{cmd_run, RunOutput};
pub use validate::{cmd_demo_validate, validate_demos, DemoReport, ReplReport};

use crate::envs::EnvError;
use crate::gateway::LlmError;
use crate::kernel::KernelError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Bad flags or inconsistent settings, caught before any episode runs.
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn write_file(path: &std::path::Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}
