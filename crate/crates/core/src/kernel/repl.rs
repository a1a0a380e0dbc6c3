use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::KernelError;
use crate::interp::{CallLedger, Scope, Value};
use crate::mlang::{echo_block, ast::Stmt, SourceBlock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    /// Block source; rendered with `>>> ` / `... ` markers.
    Code,
    /// Printed text.
    #[serde(alias = "stdout")]
    Output,
    /// Value of an expression statement.
    Echo,
    Obs,
    Error,
    /// Separates a frozen demo segment from live entries.
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub kind: EntryKind,
    pub text: String,
}

impl HistoryEntry {
    pub fn new(kind: EntryKind, text: impl Into<String>) -> Self {
        Self {
            kind,
            text: text.into(),
        }
    }

    /// Text as it appears in a prompt transcript.
    pub fn render(&self) -> String {
        match self.kind {
            EntryKind::Code => echo_block(&self.text),
            EntryKind::Output => self.text.strip_suffix('\n').unwrap_or(&self.text).to_string(),
            _ => self.text.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplStatus {
    Idle,
    Running,
    AwaitingChild,
    FinishedBlock,
}

/// One named REPL: a frozen demo segment, a live history, and the state of
/// its current block.
#[derive(Debug, Clone)]
pub struct LlmRepl {
    pub name: String,
    pub task: String,
    /// Task line of the demo segment, when the REPL came from a demo file.
    pub demo_task: Option<String>,
    pub demo: Vec<HistoryEntry>,
    pub history: Vec<HistoryEntry>,
    pub scope: Scope,
    pub ledger: CallLedger,
    pub suspended: Option<(SourceBlock, Stmt)>,
    pub invocation_args: Vec<Value>,
    pub status: ReplStatus,
    pub(crate) syntax_failures: usize,
}

impl LlmRepl {
    pub fn new(name: impl Into<String>, task: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            task: task.into(),
            demo_task: None,
            demo: Vec::new(),
            history: Vec::new(),
            scope: Scope::new(),
            ledger: CallLedger::new(),
            suspended: None,
            invocation_args: Vec::new(),
            status: ReplStatus::Idle,
            syntax_failures: 0,
        }
    }

    fn from_demo(demo: DemoRepl) -> Self {
        let mut repl = Self::new(demo.name, demo.task.clone());
        repl.demo_task = Some(demo.task);
        repl.demo = demo.entries;
        repl
    }

    /// Drops live state, keeping the demo segment.
    pub fn reset_live(&mut self) {
        self.history.clear();
        self.scope = Scope::new();
        self.ledger.clear();
        self.suspended = None;
        self.invocation_args.clear();
        self.status = ReplStatus::Idle;
        self.syntax_failures = 0;
        if let Some(t) = &self.demo_task {
            self.task = t.clone();
        }
    }

    pub fn push(&mut self, kind: EntryKind, text: impl Into<String>) {
        self.history.push(HistoryEntry::new(kind, text));
    }

    /// Value `get_args()` returns for the current invocation.
    pub fn args_value(&self) -> Value {
        match self.invocation_args.len() {
            0 => Value::None,
            1 => self.invocation_args[0].clone(),
            _ => Value::tuple(self.invocation_args.clone()),
        }
    }
}

/// Demo file layout.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DemoFile {
    #[serde(default)]
    pub repls: Vec<DemoRepl>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoRepl {
    pub name: String,
    pub task: String,
    #[serde(default)]
    pub entries: Vec<HistoryEntry>,
}

impl DemoFile {
    pub fn parse(text: &str) -> Result<Self, KernelError> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| KernelError::Demo(e.to_string()))?;
        let repls = raw
            .get("repls")
            .and_then(|r| r.as_array())
            .ok_or_else(|| KernelError::Demo("missing `repls` array".into()))?;
        let mut out = Vec::with_capacity(repls.len());
        for (i, r) in repls.iter().enumerate() {
            let label = r
                .get("name")
                .and_then(|n| n.as_str())
                .map(|n| format!("`{n}`"))
                .unwrap_or_else(|| format!("#{i}"));
            let repl: DemoRepl = serde_json::from_value(r.clone())
                .map_err(|e| KernelError::Demo(format!("repl {label}: {e}")))?;
            out.push(repl);
        }
        Ok(Self { repls: out })
    }

    pub fn load(path: &Path) -> Result<Self, KernelError> {
        let text = fs::read_to_string(path)
            .map_err(|e| KernelError::Demo(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// The global name → REPL registry.
#[derive(Debug, Clone, Default)]
pub struct ReplPool {
    entries: IndexMap<String, LlmRepl>,
}

impl ReplPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_demos(file: DemoFile) -> Self {
        let mut pool = Self::new();
        for demo in file.repls {
            pool.insert(LlmRepl::from_demo(demo));
        }
        pool
    }

    /// Loads a demo file into a pool of frozen REPLs.
    pub fn load_demos(path: &Path) -> Result<Self, KernelError> {
        Ok(Self::from_demos(DemoFile::load(path)?))
    }

    pub fn insert(&mut self, repl: LlmRepl) {
        self.entries.insert(repl.name.clone(), repl);
    }

    pub fn get(&self, name: &str) -> Option<&LlmRepl> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut LlmRepl> {
        self.entries.get_mut(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<LlmRepl> {
        self.entries.shift_remove(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fresh copy for one episode: demo segments kept, live state dropped.
    pub fn for_episode(&self) -> Self {
        let mut pool = self.clone();
        for repl in pool.entries.values_mut() {
            repl.reset_live();
        }
        pool
    }
}
