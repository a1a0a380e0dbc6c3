use std::collections::HashMap;

use super::value::Value;

#[derive(Debug, Clone)]
pub struct CachedCall {
    pub value: Value,
    /// Text a `print` call produced, kept so replays stay silent.
    pub printed: Option<String>,
}

/// Resolved context-sensitive calls of the current block, keyed by callable
/// name and 1-based call index within one evaluation pass.
#[derive(Debug, Clone, Default)]
pub struct CallLedger {
    counters: HashMap<String, usize>,
    cache: HashMap<(String, usize), CachedCall>,
}

impl CallLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded calls for `name`.
    pub fn count(&self, name: &str) -> usize {
        self.counters.get(name).copied().unwrap_or(0)
    }

    pub fn lookup(&self, name: &str, index: usize) -> Option<&CachedCall> {
        if index > self.count(name) {
            return None;
        }
        self.cache.get(&(name.to_string(), index))
    }

    pub fn record(&mut self, name: &str, index: usize, value: Value) {
        self.insert(name, index, CachedCall { value, printed: None });
    }

    pub(crate) fn record_print(&mut self, index: usize, text: String) {
        self.record_output("print", index, text);
    }

    /// Records text produced by a pass so later passes do not repeat it.
    pub(crate) fn record_output(&mut self, name: &str, index: usize, text: String) {
        self.insert(
            name,
            index,
            CachedCall {
                value: Value::None,
                printed: Some(text),
            },
        );
    }

    fn insert(&mut self, name: &str, index: usize, call: CachedCall) {
        let counter = self.counters.entry(name.to_string()).or_insert(0);
        *counter = (*counter).max(index);
        self.cache.insert((name.to_string(), index), call);
    }

    pub fn total(&self) -> usize {
        self.cache.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.is_empty()
    }

    pub fn clear(&mut self) {
        self.counters.clear();
        self.cache.clear();
    }
}
