//! The recursive REPL kernel: drives LLM-REPLs, spawns children on calls to
//! unknown functions, routes actions to the environment, and records traces.

mod episode;
mod repl;
mod trace;

pub use episode::{run_episode, EpisodeOutcome, EpisodeResult, Termination};
pub use repl::{
    DemoFile, DemoRepl, EntryKind, HistoryEntry, LlmRepl, ReplPool, ReplStatus,
};
pub use trace::{enter_marker, exit_marker, Trace, TraceEvent};

use crate::gateway::CompletionParams;

/// Name of the root REPL.
pub const ROOT: &str = "_main";

/// Consecutive syntax failures after which a REPL gives up with `answer(None)`.
pub const MAX_SYNTAX_FAILURES: usize = 3;

/// Continuation queries allowed while completing one compound block.
pub const MAX_CONTINUATIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    pub max_env_steps: usize,
    pub max_llm_calls: usize,
    pub max_spawn_depth: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            max_env_steps: 50,
            max_llm_calls: 100,
            max_spawn_depth: 16,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct KernelConfig {
    pub budgets: Budgets,
    /// Calls to unknown functions become name errors instead of spawns.
    pub no_subtask_repls: bool,
    pub params: CompletionParams,
}

#[derive(Debug, thiserror::Error)]
pub enum KernelError {
    #[error("demo file: {0}")]
    Demo(String),
}
