//! Text environments behind one interface.

mod counter;
mod minishop;
mod transcript;

pub use counter::CounterEnv;
pub use minishop::{parse_action, CatalogItem, MiniWebShop, ShopAction, ShopTask};
pub use transcript::{TranscriptEnv, TranscriptStep};

#[derive(Debug, Clone, PartialEq)]
pub struct EnvResult {
    pub obs: String,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("step after the episode ended")]
    StepAfterDone,
    #[error("unknown task {0}")]
    UnknownTask(usize),
    #[error("{0}")]
    Load(String),
}

pub trait Environment: Send {
    /// Starts task `task` and returns the first observation.
    fn reset(&mut self, task: usize) -> Result<String, EnvError>;
    fn step(&mut self, action: &str) -> Result<EnvResult, EnvError>;
    /// Score of the episode so far, in [0, 1].
    fn score(&self) -> f64;
    /// Task line for the root REPL.
    fn task_description(&self) -> String;
    /// Actions received since the last reset, in order.
    fn actions(&self) -> &[String];
    fn num_tasks(&self) -> usize {
        1
    }
}

pub(crate) fn load_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T, EnvError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EnvError::Load(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| EnvError::Load(format!("{}: {e}", path.display())))
}
