//! LLM access: prompt rendering, block extraction, and completion providers.
//!
//! Two providers ship: [`ScriptedProvider`] replays authored completions and
//! is the test oracle; [`HttpProvider`] speaks the chat-completions wire
//! format.

mod extract;
mod http;
mod prompt;
mod scripted;

pub use extract::{extract_block, strip_markers, ExtractError};
pub use http::{HttpConfig, HttpProvider};
pub use prompt::{
    parse_subtask, render_prompt, render_transcript, Prompt, PromptMode, PREAMBLE,
    PREAMBLE_VERSION, TASK_PREFIX,
};
pub use scripted::{OfflineProvider, Playbook, PlaybookEntry, ScriptedProvider};

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop: Vec<String>,
}

impl Default for CompletionParams {
    fn default() -> Self {
        Self {
            model: "gpt-4o-mini".to_string(),
            temperature: 0.0,
            max_tokens: 512,
            stop: vec!["\n>>>".to_string()],
        }
    }
}

impl CompletionParams {
    /// Stop sequences with `"\n>>>"` guaranteed present.
    pub fn stops(&self) -> Vec<String> {
        let mut s = self.stop.clone();
        if !s.iter().any(|x| x == "\n>>>") {
            s.push("\n>>>".to_string());
        }
        s
    }
}

/// One query: the REPL it is for, and its rendered prompt.
#[derive(Debug, Clone)]
pub struct LlmRequest {
    /// Name whose completions answer this query. For subtask descriptions
    /// this is the new function's name.
    pub repl: String,
    pub prompt: Prompt,
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("playbook exhausted for REPL `{repl}` at turn {turn}")]
    Exhausted { repl: String, turn: usize },
    #[error("prompt for REPL `{repl}` at turn {turn} does not start with the expected prefix {expected:?}")]
    PrefixMismatch {
        repl: String,
        turn: usize,
        expected: String,
    },
    #[error("network access attempted by an offline provider")]
    Offline,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Response(String),
    #[error("configuration error: {0}")]
    Config(String),
}

/// A source of completions. Implementations must tolerate concurrent use
/// from several episodes.
pub trait LlmProvider: Send + Sync {
    fn complete(&self, request: &LlmRequest, params: &CompletionParams) -> Result<String, LlmError>;
}
