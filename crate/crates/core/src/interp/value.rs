use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use indexmap::IndexMap;

use crate::pyfmt::{repr_float, repr_str};

/// Runtime values. Lists and mappings are shared and mutable, as in Python.
#[derive(Clone)]
pub enum Value {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(Rc<str>),
    List(Rc<RefCell<Vec<Value>>>),
    Map(Rc<RefCell<Mapping>>),
    Tuple(Rc<Vec<Value>>),
    BuiltinFn(&'static str),
    ReplFn(Rc<str>),
}

/// Insertion-ordered mapping. Keys are normalized so `1`, `1.0` and `True`
/// address the same slot, as in Python.
#[derive(Clone, Default)]
pub struct Mapping {
    entries: IndexMap<HashKey, (Value, Value)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum HashKey {
    Int(i64),
    Float(u64),
    Text(Rc<str>),
    None,
    Tuple(Vec<HashKey>),
}

impl HashKey {
    /// None for unhashable values.
    pub fn of(v: &Value) -> Option<HashKey> {
        Some(match v {
            Value::None => HashKey::None,
            Value::Bool(b) => HashKey::Int(*b as i64),
            Value::Int(i) => HashKey::Int(*i),
            Value::Float(f) => {
                if f.fract() == 0.0 && f.abs() < 9.2e18 {
                    HashKey::Int(*f as i64)
                } else if f.is_nan() {
                    HashKey::Float(f64::NAN.to_bits())
                } else {
                    HashKey::Float(f.to_bits())
                }
            }
            Value::Text(s) => HashKey::Text(s.clone()),
            Value::Tuple(items) => {
                HashKey::Tuple(items.iter().map(HashKey::of).collect::<Option<Vec<_>>>()?)
            }
            Value::BuiltinFn(n) => HashKey::Text(format!("<builtin {n}>").into()),
            Value::ReplFn(n) => HashKey::Text(format!("<repl {n}>").into()),
            Value::List(_) | Value::Map(_) => return None,
        })
    }
}

impl Mapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &HashKey) -> Option<&Value> {
        self.entries.get(key).map(|(_, v)| v)
    }

    /// Inserting over an existing key keeps the original key object and slot.
    pub fn insert(&mut self, hk: HashKey, key: Value, value: Value) {
        match self.entries.get_mut(&hk) {
            Some(slot) => slot.1 = value,
            None => {
                self.entries.insert(hk, (key, value));
            }
        }
    }

    pub fn remove(&mut self, key: &HashKey) -> Option<Value> {
        self.entries.shift_remove(key).map(|(_, v)| v)
    }

    pub fn contains(&self, key: &HashKey) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &Value> {
        self.entries.values().map(|(k, _)| k)
    }

    pub fn values(&self) -> impl Iterator<Item = &Value> {
        self.entries.values().map(|(_, v)| v)
    }

    pub fn items(&self) -> impl Iterator<Item = (&Value, &Value)> {
        self.entries.values().map(|(k, v)| (k, v))
    }
}

impl Value {
    pub fn text(s: impl AsRef<str>) -> Value {
        Value::Text(Rc::from(s.as_ref()))
    }

    pub fn list(items: Vec<Value>) -> Value {
        Value::List(Rc::new(RefCell::new(items)))
    }

    pub fn tuple(items: Vec<Value>) -> Value {
        Value::Tuple(Rc::new(items))
    }

    pub fn map(m: Mapping) -> Value {
        Value::Map(Rc::new(RefCell::new(m)))
    }

    pub fn repl_fn(name: &str) -> Value {
        Value::ReplFn(Rc::from(name))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::None => "NoneType",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Text(_) => "str",
            Value::List(_) => "list",
            Value::Map(_) => "dict",
            Value::Tuple(_) => "tuple",
            Value::BuiltinFn(_) => "builtin_function_or_method",
            Value::ReplFn(_) => "LLMREPL",
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::None => false,
            Value::Bool(b) => *b,
            Value::Int(i) => *i != 0,
            Value::Float(f) => *f != 0.0,
            Value::Text(s) => !s.is_empty(),
            Value::List(l) => !l.borrow().is_empty(),
            Value::Map(m) => !m.borrow().is_empty(),
            Value::Tuple(t) => !t.is_empty(),
            Value::BuiltinFn(_) | Value::ReplFn(_) => true,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Numeric view for Int/Float/Bool.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Bool(b) => Some(*b as i64 as f64),
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Bool(b) => Some(*b as i64),
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Python `==`.
    pub fn py_eq(&self, other: &Value) -> bool {
        use Value::*;
        match (self, other) {
            (None, None) => true,
            (Int(_) | Bool(_), Int(_) | Bool(_)) => self.as_int() == other.as_int(),
            (Int(_) | Bool(_) | Float(_), Int(_) | Bool(_) | Float(_)) => {
                num_eq(self, other)
            }
            (Text(a), Text(b)) => a == b,
            (List(a), List(b)) => {
                Rc::ptr_eq(a, b) || seq_eq(&a.borrow(), &b.borrow())
            }
            (Tuple(a), Tuple(b)) => seq_eq(a, b),
            (Map(a), Map(b)) => {
                if Rc::ptr_eq(a, b) {
                    return true;
                }
                let (a, b) = (a.borrow(), b.borrow());
                a.len() == b.len()
                    && a.entries
                        .iter()
                        .all(|(k, (_, v))| b.get(k).is_some_and(|w| v.py_eq(w)))
            }
            (BuiltinFn(a), BuiltinFn(b)) => a == b,
            (ReplFn(a), ReplFn(b)) => a == b,
            _ => false,
        }
    }

    /// Python `is`, approximated: identity for containers, equality of
    /// same-typed scalars otherwise.
    pub fn py_is(&self, other: &Value) -> bool {
        use Value::*;
        match (self, other) {
            (None, None) => true,
            (Bool(a), Bool(b)) => a == b,
            (Int(a), Int(b)) => a == b,
            (Float(a), Float(b)) => a.to_bits() == b.to_bits(),
            (Text(a), Text(b)) => a == b,
            (List(a), List(b)) => Rc::ptr_eq(a, b),
            (Map(a), Map(b)) => Rc::ptr_eq(a, b),
            (Tuple(a), Tuple(b)) => Rc::ptr_eq(a, b),
            (BuiltinFn(a), BuiltinFn(b)) => a == b,
            (ReplFn(a), ReplFn(b)) => a == b,
            _ => false,
        }
    }

    /// Copy with fresh containers. Aliasing inside the value is preserved.
    pub fn deep_copy(&self) -> Value {
        self.deep_copy_with(&mut HashMap::new())
    }

    pub(crate) fn deep_copy_with(&self, memo: &mut HashMap<usize, Value>) -> Value {
        match self {
            Value::List(l) => {
                let key = Rc::as_ptr(l) as *const () as usize;
                if let Some(v) = memo.get(&key) {
                    return v.clone();
                }
                let fresh = Rc::new(RefCell::new(Vec::new()));
                memo.insert(key, Value::List(fresh.clone()));
                let items: Vec<Value> = l.borrow().iter().map(|v| v.deep_copy_with(memo)).collect();
                *fresh.borrow_mut() = items;
                Value::List(fresh)
            }
            Value::Map(m) => {
                let key = Rc::as_ptr(m) as *const () as usize;
                if let Some(v) = memo.get(&key) {
                    return v.clone();
                }
                let fresh = Rc::new(RefCell::new(Mapping::new()));
                memo.insert(key, Value::Map(fresh.clone()));
                let copied: IndexMap<HashKey, (Value, Value)> = m
                    .borrow()
                    .entries
                    .iter()
                    .map(|(hk, (k, v))| (hk.clone(), (k.deep_copy_with(memo), v.deep_copy_with(memo))))
                    .collect();
                fresh.borrow_mut().entries = copied;
                Value::Map(fresh)
            }
            Value::Tuple(t) => {
                let key = Rc::as_ptr(t) as *const () as usize;
                if let Some(v) = memo.get(&key) {
                    return v.clone();
                }
                let v = Value::tuple(t.iter().map(|v| v.deep_copy_with(memo)).collect());
                memo.insert(key, v.clone());
                v
            }
            other => other.clone(),
        }
    }

    /// Structural equality that also distinguishes types and float bits.
    /// Used for snapshot comparison.
    pub fn same(&self, other: &Value) -> bool {
        use Value::*;
        match (self, other) {
            (None, None) => true,
            (Bool(a), Bool(b)) => a == b,
            (Int(a), Int(b)) => a == b,
            (Float(a), Float(b)) => a.to_bits() == b.to_bits(),
            (Text(a), Text(b)) => a == b,
            (List(a), List(b)) => {
                let (a, b) = (a.borrow(), b.borrow());
                a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.same(y))
            }
            (Tuple(a), Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.same(y))
            }
            (Map(a), Map(b)) => {
                let (a, b) = (a.borrow(), b.borrow());
                a.len() == b.len()
                    && a.items()
                        .zip(b.items())
                        .all(|((k1, v1), (k2, v2))| k1.same(k2) && v1.same(v2))
            }
            (BuiltinFn(a), BuiltinFn(b)) => a == b,
            (ReplFn(a), ReplFn(b)) => a == b,
            _ => false,
        }
    }

    /// Python `repr()`.
    pub fn repr(&self) -> String {
        let mut out = String::new();
        self.write_repr(&mut out, &mut Vec::new());
        out
    }

    /// Python `str()`.
    pub fn to_str(&self) -> String {
        match self {
            Value::Text(s) => s.to_string(),
            other => other.repr(),
        }
    }

    fn write_repr(&self, out: &mut String, seen: &mut Vec<usize>) {
        match self {
            Value::None => out.push_str("None"),
            Value::Bool(true) => out.push_str("True"),
            Value::Bool(false) => out.push_str("False"),
            Value::Int(i) => out.push_str(&i.to_string()),
            Value::Float(f) => out.push_str(&repr_float(*f)),
            Value::Text(s) => out.push_str(&repr_str(s)),
            Value::List(l) => {
                let key = Rc::as_ptr(l) as *const () as usize;
                if seen.contains(&key) {
                    out.push_str("[...]");
                    return;
                }
                seen.push(key);
                out.push('[');
                for (i, v) in l.borrow().iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    v.write_repr(out, seen);
                }
                out.push(']');
                seen.pop();
            }
            Value::Tuple(t) => {
                out.push('(');
                for (i, v) in t.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    v.write_repr(out, seen);
                }
                if t.len() == 1 {
                    out.push(',');
                }
                out.push(')');
            }
            Value::Map(m) => {
                let key = Rc::as_ptr(m) as *const () as usize;
                if seen.contains(&key) {
                    out.push_str("{...}");
                    return;
                }
                seen.push(key);
                out.push('{');
                for (i, (k, v)) in m.borrow().items().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    k.write_repr(out, seen);
                    out.push_str(": ");
                    v.write_repr(out, seen);
                }
                out.push('}');
                seen.pop();
            }
            Value::BuiltinFn(n) => out.push_str(&format!("<built-in function {n}>")),
            Value::ReplFn(n) => out.push_str(&format!("<LLMREPL {n}>")),
        }
    }
}

fn num_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Float(x), Value::Float(y)) => x == y,
        (Value::Float(x), other) | (other, Value::Float(x)) => {
            let i = other.as_int().expect("int-like");
            // Exact comparison: the float must be integral and equal.
            x.fract() == 0.0 && *x >= -9.223372036854776e18 && *x < 9.223372036854776e18 && *x as i64 == i
        }
        _ => a.as_int() == b.as_int(),
    }
}

fn seq_eq(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.py_eq(y))
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.py_eq(other)
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.repr())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_str())
    }
}

/// Rendering context for `render_value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderContext {
    /// Value of an expression statement echoed by the REPL. None is suppressed.
    ReplEcho,
    /// Argument to `print`.
    Print,
}

pub fn render_value(v: &Value, context: RenderContext) -> String {
    match context {
        RenderContext::ReplEcho => match v {
            Value::None => String::new(),
            other => other.repr(),
        },
        RenderContext::Print => v.to_str(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering() {
        let v = Value::text("no options found.");
        assert_eq!(render_value(&v, RenderContext::ReplEcho), "'no options found.'");
        let l = Value::list(vec![
            Value::text("noise cancelling"),
            Value::text("cosycost"),
            Value::text("usb microphone"),
        ]);
        assert_eq!(
            render_value(&l, RenderContext::Print),
            "['noise cancelling', 'cosycost', 'usb microphone']"
        );
        assert_eq!(render_value(&Value::None, RenderContext::ReplEcho), "");
        assert_eq!(Value::tuple(vec![Value::Int(1)]).repr(), "(1,)");
    }

    #[test]
    fn numeric_keys_collapse() {
        let mut m = Mapping::new();
        m.insert(HashKey::of(&Value::Int(1)).unwrap(), Value::Int(1), Value::text("a"));
        m.insert(HashKey::of(&Value::Float(1.0)).unwrap(), Value::Float(1.0), Value::text("b"));
        assert_eq!(m.len(), 1);
        assert_eq!(Value::map(m).repr(), "{1: 'b'}");
    }

    #[test]
    fn deep_copy_preserves_aliasing() {
        let inner = Value::list(vec![Value::Int(1)]);
        let outer = Value::list(vec![inner.clone(), inner]);
        let copy = outer.deep_copy();
        let Value::List(c) = &copy else { unreachable!() };
        let c = c.borrow();
        let (Value::List(a), Value::List(b)) = (&c[0], &c[1]) else { unreachable!() };
        assert!(Rc::ptr_eq(a, b));
        let Value::List(o) = &outer else { unreachable!() };
        let Value::List(orig) = &o.borrow()[0] else { unreachable!() };
        assert!(!Rc::ptr_eq(a, orig));
    }

    #[test]
    fn repl_fn_equality_by_name() {
        assert_eq!(Value::repl_fn("a"), Value::repl_fn("a"));
        assert_ne!(Value::repl_fn("a"), Value::repl_fn("b"));
    }
}
