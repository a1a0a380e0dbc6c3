use std::collections::HashMap;

use indexmap::IndexMap;

use super::value::Value;

/// Variable bindings of one REPL. REPLs never share a scope.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    bindings: IndexMap<String, Value>,
    snapshot_id: u64,
}

impl Scope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.get(name)
    }

    pub fn set(&mut self, name: impl Into<String>, value: Value) {
        self.bindings.insert(name.into(), value);
    }

    pub fn remove(&mut self, name: &str) -> Option<Value> {
        self.bindings.shift_remove(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.bindings.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.bindings.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Incremented every time a completed block is committed.
    pub fn snapshot_id(&self) -> u64 {
        self.snapshot_id
    }

    /// Deep copy sharing no mutable state with `self`. Aliasing between
    /// bindings is preserved.
    pub fn snapshot(&self) -> Scope {
        let mut memo = HashMap::new();
        Scope {
            bindings: self
                .bindings
                .iter()
                .map(|(k, v)| (k.clone(), v.deep_copy_with(&mut memo)))
                .collect(),
            snapshot_id: self.snapshot_id,
        }
    }

    pub(crate) fn commit(&mut self, working: Scope) {
        self.bindings = working.bindings;
        self.snapshot_id += 1;
    }

    /// Exact comparison: same names in the same order with identical values.
    pub fn same_as(&self, other: &Scope) -> bool {
        self.bindings.len() == other.bindings.len()
            && self
                .bindings
                .iter()
                .zip(other.bindings.iter())
                .all(|((k1, v1), (k2, v2))| k1 == k2 && v1.same(v2))
    }
}
