use serde::Serialize;
use serde_json::{json, Value as Json};

/// One structured event. `t` is a logical clock, so traces of identical
/// runs are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    pub t: u64,
    pub event: String,
    pub repl: String,
    pub payload: Json,
}

/// Human-readable log with ENTER/EXIT markers plus the event stream.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    log: String,
    events: Vec<TraceEvent>,
    clock: u64,
}

pub fn enter_marker(name: &str) -> String {
    format!("##### ENTER REPL `{name}` #####")
}

/// The exit marker has no space before the closing hashes.
pub fn exit_marker(name: &str) -> String {
    format!("##### EXITING REPL `{name}`#####")
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn log(&self) -> &str {
        &self.log
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn event(&mut self, event: &str, repl: &str, payload: Json) {
        self.clock += 1;
        self.events.push(TraceEvent {
            t: self.clock,
            event: event.to_string(),
            repl: repl.to_string(),
            payload,
        });
    }

    /// Appends `text` to the log as complete lines.
    pub fn line(&mut self, text: &str) {
        self.log.push_str(text);
        if !text.ends_with('\n') {
            self.log.push('\n');
        }
    }

    pub fn enter(&mut self, name: &str) {
        self.line(&enter_marker(name));
        self.event("enter", name, Json::Null);
    }

    pub fn exit(&mut self, name: &str) {
        self.line(&exit_marker(name));
        self.event("exit", name, Json::Null);
    }

    pub fn obs(&mut self, repl: &str, text: &str) {
        self.line(text);
        self.event("obs", repl, json!({ "text": text }));
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn count(&self, event: &str) -> usize {
        self.events.iter().filter(|e| e.event == event).count()
    }
}
