use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{CompletionParams, LlmError, LlmProvider, LlmRequest};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaybookEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_prefix: Option<String>,
    pub completion: String,
}

/// Per-REPL ordered completion queues.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Playbook(pub IndexMap<String, Vec<PlaybookEntry>>);

impl Playbook {
    pub fn parse(text: &str) -> Result<Self, LlmError> {
        serde_json::from_str(text).map_err(|e| LlmError::Config(format!("playbook: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = fs::read_to_string(path)
            .map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Builds a playbook from plain completion lists.
    pub fn from_completions<'a>(queues: impl IntoIterator<Item = (&'a str, Vec<&'a str>)>) -> Self {
        Playbook(
            queues
                .into_iter()
                .map(|(name, cs)| {
                    let entries = cs
                        .into_iter()
                        .map(|c| PlaybookEntry {
                            expect_prefix: None,
                            completion: c.to_string(),
                        })
                        .collect();
                    (name.to_string(), entries)
                })
                .collect(),
        )
    }

    pub fn total(&self) -> usize {
        self.0.values().map(Vec::len).sum()
    }
}

struct Queue {
    entries: VecDeque<PlaybookEntry>,
    turn: usize,
}

/// Replays a playbook. Each REPL name has its own queue; running out is an
/// error rather than a reason to recycle.
pub struct ScriptedProvider {
    queues: Mutex<HashMap<String, Queue>>,
}

impl ScriptedProvider {
    pub fn new(playbook: Playbook) -> Self {
        let queues = playbook
            .0
            .into_iter()
            .map(|(name, entries)| {
                (
                    name,
                    Queue {
                        entries: entries.into(),
                        turn: 0,
                    },
                )
            })
            .collect();
        Self {
            queues: Mutex::new(queues),
        }
    }

    /// Completions not yet consumed, per REPL.
    pub fn remaining(&self) -> Vec<(String, usize)> {
        let q = self.queues.lock().expect("playbook lock");
        let mut out: Vec<_> = q
            .iter()
            .filter(|(_, v)| !v.entries.is_empty())
            .map(|(k, v)| (k.clone(), v.entries.len()))
            .collect();
        out.sort();
        out
    }
}

impl LlmProvider for ScriptedProvider {
    fn complete(&self, request: &LlmRequest, _params: &CompletionParams) -> Result<String, LlmError> {
        let mut queues = self.queues.lock().expect("playbook lock");
        let queue = queues.entry(request.repl.clone()).or_insert_with(|| Queue {
            entries: VecDeque::new(),
            turn: 0,
        });
        queue.turn += 1;
        let turn = queue.turn;
        let entry = queue.entries.pop_front().ok_or_else(|| LlmError::Exhausted {
            repl: request.repl.clone(),
            turn,
        })?;
        if let Some(prefix) = &entry.expect_prefix {
            if !request.prompt.transcript.starts_with(prefix.as_str()) {
                return Err(LlmError::PrefixMismatch {
                    repl: request.repl.clone(),
                    turn,
                    expected: prefix.clone(),
                });
            }
        }
        Ok(entry.completion)
    }
}

/// Fails on every query; stands in where no network access may occur.
pub struct OfflineProvider;

impl LlmProvider for OfflineProvider {
    fn complete(&self, _request: &LlmRequest, _params: &CompletionParams) -> Result<String, LlmError> {
        Err(LlmError::Offline)
    }
}
