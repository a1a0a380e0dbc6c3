use crate::kernel::LlmRepl;
use crate::mlang::echo_partial;

/// Versioned system instructions sent with every query.
pub const PREAMBLE: &str = include_str!("../../assets/preamble_v1.txt");
pub const PREAMBLE_VERSION: &str = "v1";

pub const TASK_PREFIX: &str = "Your task is to:";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PromptMode {
    NextBlock,
    /// A compound block has been started; the model continues it.
    Continuation { partial: String },
    /// The REPL being rendered called the undefined function `fname`.
    SubtaskDescription { fname: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub preamble: String,
    pub transcript: String,
    pub mode: PromptMode,
}

impl Prompt {
    /// Single user-message form of the prompt.
    pub fn text(&self) -> String {
        self.transcript.clone()
    }
}

/// Renders the demo segment, then the live task line and entries.
pub fn render_transcript(repl: &LlmRepl) -> String {
    let mut out = String::new();
    if let Some(demo_task) = &repl.demo_task {
        if !repl.demo.is_empty() {
            out.push_str(&format!("{TASK_PREFIX} {demo_task}\n"));
            for e in &repl.demo {
                out.push_str(&e.render());
                out.push('\n');
            }
            out.push('\n');
        }
    }
    out.push_str(&format!("{TASK_PREFIX} {}\n", repl.task));
    for e in &repl.history {
        out.push_str(&e.render());
        out.push('\n');
    }
    out
}

pub fn render_prompt(repl: &LlmRepl, mode: PromptMode) -> Prompt {
    let mut transcript = render_transcript(repl);
    match &mode {
        PromptMode::NextBlock => transcript.push_str(">>> "),
        PromptMode::Continuation { partial } => transcript.push_str(&echo_partial(partial)),
        PromptMode::SubtaskDescription { fname } => {
            transcript.push_str(&format!(
                "\nThe function `{fname}` called above does not exist yet. \
                 State the task it should perform in one line.\n{TASK_PREFIX}"
            ));
        }
    }
    Prompt {
        preamble: PREAMBLE.to_string(),
        transcript,
        mode,
    }
}

/// Task text from a subtask-description completion.
pub fn parse_subtask(completion: &str, fname: &str) -> String {
    let line = completion
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("");
    let task = line.strip_prefix(TASK_PREFIX).unwrap_or(line).trim();
    if task.is_empty() {
        format!("Complete the subtask `{fname}`.")
    } else {
        task.to_string()
    }
}
