//! Built-in functions and methods available to MiniLang code.

use std::cell::RefCell;

use super::fault::{fault, RuntimeFault};
use super::ops::{self, binop, hash_key, iterate};
use super::value::{Mapping, Value};
use crate::mlang::ast::BinOp;

/// Context-sensitive primitives: each call crosses into the kernel.
pub const PRIMITIVES: &[&str] = &["act", "answer", "get_args", "get_obs", "print_page"];

pub const BUILTINS: &[&str] = &[
    "print", "len", "range", "max", "min", "sorted", "enumerate", "str", "int", "float", "abs",
    "sum", "list", "bool", "round", "zip", "any", "all", "tuple", "dict", "reversed",
];

pub fn lookup(name: &str) -> Option<&'static str> {
    PRIMITIVES
        .iter()
        .chain(BUILTINS.iter())
        .find(|n| **n == name)
        .copied()
}

pub fn is_primitive(name: &str) -> bool {
    PRIMITIVES.contains(&name)
}

type Kwargs = Vec<(String, Value)>;

fn arity(name: &str, args: &[Value], min: usize, max: usize) -> Result<(), RuntimeFault> {
    let n = args.len();
    if n >= min && n <= max {
        return Ok(());
    }
    let msg = if min == max {
        match min {
            0 => format!("{name}() takes no arguments ({n} given)"),
            1 => format!("{name}() takes exactly one argument ({n} given)"),
            _ => format!("{name}() takes exactly {min} arguments ({n} given)"),
        }
    } else if n < min {
        format!("{name} expected at least {min} argument{}, got {n}", if min == 1 { "" } else { "s" })
    } else {
        format!("{name} expected at most {max} arguments, got {n}")
    };
    Err(fault("TypeError", msg))
}

fn no_kwargs(name: &str, kwargs: &Kwargs) -> Result<(), RuntimeFault> {
    if kwargs.is_empty() {
        Ok(())
    } else {
        Err(fault("TypeError", format!("{name}() takes no keyword arguments")))
    }
}

fn take_kwargs(name: &str, kwargs: Kwargs, allowed: &[&str]) -> Result<Vec<(String, Value)>, RuntimeFault> {
    for (k, _) in &kwargs {
        if !allowed.contains(&k.as_str()) {
            return Err(fault(
                "TypeError",
                format!("'{k}' is an invalid keyword argument for {name}()"),
            ));
        }
    }
    Ok(kwargs)
}

fn kwarg<'a>(kwargs: &'a [(String, Value)], key: &str) -> Option<&'a Value> {
    kwargs.iter().find(|(k, _)| k == key).map(|(_, v)| v)
}

fn int_arg(v: &Value) -> Result<i64, RuntimeFault> {
    v.as_int().ok_or_else(|| {
        fault(
            "TypeError",
            format!("'{}' object cannot be interpreted as an integer", v.type_name()),
        )
    })
}

fn text_arg<'a>(what: &str, v: &'a Value) -> Result<&'a str, RuntimeFault> {
    v.as_text().ok_or_else(|| {
        fault(
            "TypeError",
            format!("{what} must be str, not {}", v.type_name()),
        )
    })
}

/// Sorts with Python ordering, surfacing the first comparison error.
/// Stable in both directions, as in Python.
fn sort_values(items: &mut [Value], reverse: bool) -> Result<(), RuntimeFault> {
    let error: RefCell<Option<RuntimeFault>> = RefCell::new(None);
    items.sort_by(|a, b| match if reverse { ops::order("<", b, a) } else { ops::order("<", a, b) } {
        Ok(o) => o,
        Err(e) => {
            error.borrow_mut().get_or_insert(e);
            std::cmp::Ordering::Equal
        }
    });
    match error.into_inner() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn extreme(name: &str, args: Vec<Value>, kwargs: Kwargs, want_greater: bool) -> Result<Value, RuntimeFault> {
    let kwargs = take_kwargs(name, kwargs, &["default"])?;
    let items = match args.len() {
        0 => return Err(fault("TypeError", format!("{name} expected at least 1 argument, got 0"))),
        1 => iterate(&args[0])?,
        _ => args,
    };
    let mut iter = items.into_iter();
    let Some(mut best) = iter.next() else {
        return match kwarg(&kwargs, "default") {
            Some(d) => Ok(d.clone()),
            None => Err(fault("ValueError", format!("{name}() arg is an empty sequence"))),
        };
    };
    let sym = if want_greater { ">" } else { "<" };
    for item in iter {
        let ord = ops::order(sym, &item, &best)?;
        let better = if want_greater {
            ord == std::cmp::Ordering::Greater
        } else {
            ord == std::cmp::Ordering::Less
        };
        if better {
            best = item;
        }
    }
    Ok(best)
}

fn parse_int_text(s: &str) -> Option<i64> {
    let t = s.trim();
    let (neg, digits) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    if digits.is_empty()
        || digits.starts_with('_')
        || digits.ends_with('_')
        || digits.contains("__")
        || !digits.chars().all(|c| c.is_ascii_digit() || c == '_')
    {
        return None;
    }
    let clean: String = digits.chars().filter(|c| *c != '_').collect();
    let v: i64 = clean.parse().ok()?;
    Some(if neg { -v } else { v })
}

fn parse_float_text(s: &str) -> Option<f64> {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    let body = lower.trim_start_matches(['+', '-']);
    if matches!(body, "inf" | "infinity" | "nan") {
        return t.parse().ok().or_else(|| {
            let neg = t.starts_with('-');
            let v = if body == "nan" { f64::NAN } else { f64::INFINITY };
            Some(if neg { -v } else { v })
        });
    }
    if t.is_empty() || !t.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-' | '_')) {
        return None;
    }
    t.replace('_', "").parse().ok()
}

fn round_half_even(x: f64) -> f64 {
    let r = x.round();
    if (x - x.trunc()).abs() == 0.5 {
        2.0 * (x / 2.0).round()
    } else {
        r
    }
}

/// Calls a non-context-sensitive builtin. `charge` accounts evaluation steps
/// for operations whose cost grows with their output.
pub(crate) fn call_builtin(
    name: &str,
    args: Vec<Value>,
    kwargs: Kwargs,
    charge: &mut dyn FnMut(usize) -> Result<(), RuntimeFault>,
) -> Result<Value, RuntimeFault> {
    match name {
        "len" => {
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 1, 1)?;
            let n = match &args[0] {
                Value::Text(s) => s.chars().count(),
                Value::List(l) => l.borrow().len(),
                Value::Tuple(t) => t.len(),
                Value::Map(m) => m.borrow().len(),
                other => {
                    return Err(fault(
                        "TypeError",
                        format!("object of type '{}' has no len()", other.type_name()),
                    ))
                }
            };
            Ok(Value::Int(n as i64))
        }
        "range" => {
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 1, 3)?;
            let ints = args
                .iter()
                .map(int_arg)
                .collect::<Result<Vec<_>, _>>()?;
            let (start, stop, step) = match ints.as_slice() {
                [stop] => (0, *stop, 1),
                [start, stop] => (*start, *stop, 1),
                [start, stop, step] => (*start, *stop, *step),
                _ => unreachable!(),
            };
            if step == 0 {
                return Err(fault("ValueError", "range() arg 3 must not be zero"));
            }
            let count = if step > 0 && stop > start {
                ((stop as i128 - start as i128 + step as i128 - 1) / step as i128) as u128
            } else if step < 0 && stop < start {
                ((start as i128 - stop as i128 + (-step) as i128 - 1) / (-step) as i128) as u128
            } else {
                0
            };
            charge(usize::try_from(count).unwrap_or(usize::MAX))?;
            let mut out = Vec::with_capacity(count as usize);
            let mut v = start as i128;
            for _ in 0..count {
                out.push(Value::Int(v as i64));
                v += step as i128;
            }
            Ok(Value::list(out))
        }
        "max" => extreme(name, args, kwargs, true),
        "min" => extreme(name, args, kwargs, false),
        "sorted" => {
            let kwargs = take_kwargs(name, kwargs, &["reverse"])?;
            arity(name, &args, 1, 1)?;
            let mut items = iterate(&args[0])?;
            charge(items.len())?;
            let reverse = kwarg(&kwargs, "reverse").is_some_and(Value::truthy);
            sort_values(&mut items, reverse)?;
            Ok(Value::list(items))
        }
        "enumerate" => {
            let kwargs = take_kwargs(name, kwargs, &["start"])?;
            arity(name, &args, 1, 2)?;
            let start = match args.get(1).or(kwarg(&kwargs, "start")) {
                Some(v) => int_arg(v)?,
                None => 0,
            };
            let items = iterate(&args[0])?;
            charge(items.len())?;
            Ok(Value::list(
                items
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| Value::tuple(vec![Value::Int(start + i as i64), v]))
                    .collect(),
            ))
        }
        "zip" => {
            no_kwargs(name, &kwargs)?;
            let seqs = args.iter().map(iterate).collect::<Result<Vec<_>, _>>()?;
            let n = seqs.iter().map(Vec::len).min().unwrap_or(0);
            charge(n)?;
            Ok(Value::list(
                (0..n)
                    .map(|i| Value::tuple(seqs.iter().map(|s| s[i].clone()).collect()))
                    .collect(),
            ))
        }
        "reversed" => {
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 1, 1)?;
            let mut items = match &args[0] {
                Value::Map(_) | Value::List(_) | Value::Tuple(_) | Value::Text(_) => iterate(&args[0])?,
                other => {
                    return Err(fault(
                        "TypeError",
                        format!("'{}' object is not reversible", other.type_name()),
                    ))
                }
            };
            items.reverse();
            Ok(Value::list(items))
        }
        "str" => {
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 0, 1)?;
            Ok(Value::text(args.first().map(Value::to_str).unwrap_or_default()))
        }
        "int" => {
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 0, 1)?;
            match args.first() {
                None => Ok(Value::Int(0)),
                Some(Value::Bool(b)) => Ok(Value::Int(*b as i64)),
                Some(Value::Int(i)) => Ok(Value::Int(*i)),
                Some(Value::Float(f)) => {
                    if f.is_nan() {
                        Err(fault("ValueError", "cannot convert float NaN to integer"))
                    } else if f.is_infinite() {
                        Err(fault("OverflowError", "cannot convert float infinity to integer"))
                    } else if f.abs() >= 9.2e18 {
                        Err(fault("OverflowError", "integer overflow"))
                    } else {
                        Ok(Value::Int(f.trunc() as i64))
                    }
                }
                Some(Value::Text(s)) => parse_int_text(s).map(Value::Int).ok_or_else(|| {
                    fault(
                        "ValueError",
                        format!("invalid literal for int() with base 10: {}", crate::pyfmt::repr_str(s)),
                    )
                }),
                Some(other) => Err(fault(
                    "TypeError",
                    format!(
                        "int() argument must be a string, a bytes-like object or a real number, not '{}'",
                        other.type_name()
                    ),
                )),
            }
        }
        "float" => {
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 0, 1)?;
            match args.first() {
                None => Ok(Value::Float(0.0)),
                Some(v @ (Value::Bool(_) | Value::Int(_) | Value::Float(_))) => {
                    Ok(Value::Float(v.as_f64().unwrap()))
                }
                Some(Value::Text(s)) => parse_float_text(s).map(Value::Float).ok_or_else(|| {
                    fault(
                        "ValueError",
                        format!("could not convert string to float: {}", crate::pyfmt::repr_str(s)),
                    )
                }),
                Some(other) => Err(fault(
                    "TypeError",
                    format!(
                        "float() argument must be a string or a real number, not '{}'",
                        other.type_name()
                    ),
                )),
            }
        }
        "bool" => {
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 0, 1)?;
            Ok(Value::Bool(args.first().is_some_and(Value::truthy)))
        }
        "abs" => {
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 1, 1)?;
            match &args[0] {
                Value::Bool(_) | Value::Int(_) => Ok(Value::Int(
                    args[0]
                        .as_int()
                        .unwrap()
                        .checked_abs()
                        .ok_or_else(|| fault("OverflowError", "integer overflow"))?,
                )),
                Value::Float(f) => Ok(Value::Float(f.abs())),
                other => Err(fault(
                    "TypeError",
                    format!("bad operand type for abs(): '{}'", other.type_name()),
                )),
            }
        }
        "round" => {
            let kwargs = take_kwargs(name, kwargs, &["ndigits"])?;
            arity(name, &args, 1, 2)?;
            let ndigits = args.get(1).or(kwarg(&kwargs, "ndigits")).filter(|v| !matches!(v, Value::None));
            match (&args[0], ndigits) {
                (v @ (Value::Bool(_) | Value::Int(_)), None) => Ok(Value::Int(v.as_int().unwrap())),
                (v @ (Value::Bool(_) | Value::Int(_)), Some(_)) => Ok(Value::Int(v.as_int().unwrap())),
                (Value::Float(f), None) => {
                    if !f.is_finite() {
                        return Err(fault("OverflowError", "cannot convert float infinity to integer"));
                    }
                    Ok(Value::Int(round_half_even(*f) as i64))
                }
                (Value::Float(f), Some(n)) => {
                    let n = int_arg(n)?;
                    if !f.is_finite() {
                        return Ok(Value::Float(*f));
                    }
                    if n >= 0 {
                        let s = format!("{:.*}", n.min(300) as usize, f);
                        Ok(Value::Float(s.parse().unwrap_or(*f)))
                    } else {
                        let p = 10f64.powi((-n).min(300) as i32);
                        Ok(Value::Float(round_half_even(f / p) * p))
                    }
                }
                (other, _) => Err(fault(
                    "TypeError",
                    format!("type {} doesn't define __round__ method", other.type_name()),
                )),
            }
        }
        "sum" => {
            let kwargs = take_kwargs(name, kwargs, &["start"])?;
            arity(name, &args, 1, 2)?;
            let mut acc = args.get(1).or(kwarg(&kwargs, "start")).cloned().unwrap_or(Value::Int(0));
            if matches!(acc, Value::Text(_)) {
                return Err(fault("TypeError", "sum() can't sum strings [use ''.join(seq) instead]"));
            }
            let items = iterate(&args[0])?;
            charge(items.len())?;
            for item in items {
                acc = binop(BinOp::Add, &acc, &item)?;
            }
            Ok(acc)
        }
        "any" | "all" => {
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 1, 1)?;
            let items = iterate(&args[0])?;
            Ok(Value::Bool(if name == "any" {
                items.iter().any(Value::truthy)
            } else {
                items.iter().all(Value::truthy)
            }))
        }
        "list" | "tuple" => {
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 0, 1)?;
            let items = match args.first() {
                Some(v) => iterate(v)?,
                None => Vec::new(),
            };
            charge(items.len())?;
            Ok(if name == "list" { Value::list(items) } else { Value::tuple(items) })
        }
        "dict" => {
            arity(name, &args, 0, 1)?;
            let mut m = Mapping::new();
            if let Some(src) = args.first() {
                match src {
                    Value::Map(other) => {
                        for (k, v) in other.borrow().items() {
                            m.insert(hash_key(k)?, k.clone(), v.clone());
                        }
                    }
                    other => {
                        for (i, pair) in iterate(other)?.into_iter().enumerate() {
                            let kv = iterate(&pair).map_err(|_| {
                                fault(
                                    "TypeError",
                                    format!("cannot convert dictionary update sequence element #{i} to a sequence"),
                                )
                            })?;
                            if kv.len() != 2 {
                                return Err(fault(
                                    "ValueError",
                                    format!(
                                        "dictionary update sequence element #{i} has length {}; 2 is required",
                                        kv.len()
                                    ),
                                ));
                            }
                            m.insert(hash_key(&kv[0])?, kv[0].clone(), kv[1].clone());
                        }
                    }
                }
            }
            for (k, v) in kwargs {
                let key = Value::text(&k);
                m.insert(hash_key(&key)?, key, v);
            }
            Ok(Value::map(m))
        }
        other => Err(fault("NameError", format!("name '{other}' is not defined"))),
    }
}

fn no_attr(recv: &Value, name: &str) -> RuntimeFault {
    fault(
        "AttributeError",
        format!("'{}' object has no attribute '{name}'", recv.type_name()),
    )
}

pub(crate) fn has_method(recv: &Value, name: &str) -> bool {
    let names: &[&str] = match recv {
        Value::List(_) => &[
            "append", "extend", "pop", "insert", "index", "count", "remove", "sort", "reverse", "copy",
            "clear",
        ],
        Value::Map(_) => &[
            "items", "keys", "values", "get", "update", "pop", "setdefault", "copy", "clear",
        ],
        Value::Text(_) => &[
            "lower", "upper", "strip", "lstrip", "rstrip", "split", "join", "replace", "startswith",
            "endswith", "find", "index", "count", "title", "capitalize", "isdigit", "isalpha",
            "splitlines", "format",
        ],
        Value::Tuple(_) => &["count", "index"],
        _ => &[],
    };
    names.contains(&name)
}

/// Calls `recv.name(*args)`.
pub(crate) fn call_method(
    recv: &Value,
    name: &str,
    args: Vec<Value>,
    kwargs: Kwargs,
    charge: &mut dyn FnMut(usize) -> Result<(), RuntimeFault>,
) -> Result<Value, RuntimeFault> {
    if !has_method(recv, name) {
        return Err(no_attr(recv, name));
    }
    match recv {
        Value::List(l) => list_method(l, name, args, kwargs, charge),
        Value::Map(m) => map_method(m, name, args, kwargs),
        Value::Text(s) => text_method(s, name, args, kwargs),
        Value::Tuple(t) => {
            no_kwargs(name, &kwargs)?;
            arity(name, &args, 1, 1)?;
            seq_search(name, "tuple", t, &args[0])
        }
        _ => Err(no_attr(recv, name)),
    }
}

fn seq_search(name: &str, kind: &str, items: &[Value], needle: &Value) -> Result<Value, RuntimeFault> {
    if name == "count" {
        return Ok(Value::Int(items.iter().filter(|v| v.py_eq(needle)).count() as i64));
    }
    items
        .iter()
        .position(|v| v.py_eq(needle))
        .map(|i| Value::Int(i as i64))
        .ok_or_else(|| fault("ValueError", format!("{kind}.index(x): x not in {kind}")))
}

fn list_method(
    l: &std::rc::Rc<RefCell<Vec<Value>>>,
    name: &str,
    args: Vec<Value>,
    kwargs: Kwargs,
    charge: &mut dyn FnMut(usize) -> Result<(), RuntimeFault>,
) -> Result<Value, RuntimeFault> {
    if name != "sort" {
        no_kwargs(name, &kwargs)?;
    }
    match name {
        "append" => {
            arity(name, &args, 1, 1)?;
            l.borrow_mut().push(args.into_iter().next().unwrap());
            Ok(Value::None)
        }
        "extend" => {
            arity(name, &args, 1, 1)?;
            let items = iterate(&args[0])?;
            charge(items.len())?;
            l.borrow_mut().extend(items);
            Ok(Value::None)
        }
        "pop" => {
            arity(name, &args, 0, 1)?;
            let mut v = l.borrow_mut();
            if v.is_empty() {
                return Err(fault("IndexError", "pop from empty list"));
            }
            let len = v.len() as i64;
            let i = match args.first() {
                Some(a) => int_arg(a)?,
                None => -1,
            };
            let idx = if i < 0 { i + len } else { i };
            if !(0..len).contains(&idx) {
                return Err(fault("IndexError", "pop index out of range"));
            }
            Ok(v.remove(idx as usize))
        }
        "insert" => {
            arity(name, &args, 2, 2)?;
            let mut v = l.borrow_mut();
            let len = v.len() as i64;
            let i = int_arg(&args[0])?;
            let idx = if i < 0 { (i + len).max(0) } else { i.min(len) };
            v.insert(idx as usize, args[1].clone());
            Ok(Value::None)
        }
        "index" | "count" => {
            arity(name, &args, 1, 1)?;
            let items = l.borrow().clone();
            seq_search(name, "list", &items, &args[0])
        }
        "remove" => {
            arity(name, &args, 1, 1)?;
            let mut v = l.borrow_mut();
            match v.iter().position(|x| x.py_eq(&args[0])) {
                Some(i) => {
                    v.remove(i);
                    Ok(Value::None)
                }
                None => Err(fault("ValueError", "list.remove(x): x not in list")),
            }
        }
        "sort" => {
            let kwargs = take_kwargs(name, kwargs, &["reverse"])?;
            arity(name, &args, 0, 0)?;
            let snapshot = Value::list(l.borrow().clone());
            let mut kw = Vec::new();
            if let Some(r) = kwarg(&kwargs, "reverse") {
                kw.push(("reverse".to_string(), r.clone()));
            }
            let sorted = call_builtin("sorted", vec![snapshot], kw, charge)?;
            let Value::List(s) = sorted else { unreachable!() };
            let items = s.borrow().clone();
            *l.borrow_mut() = items;
            Ok(Value::None)
        }
        "reverse" => {
            arity(name, &args, 0, 0)?;
            l.borrow_mut().reverse();
            Ok(Value::None)
        }
        "copy" => {
            arity(name, &args, 0, 0)?;
            Ok(Value::list(l.borrow().clone()))
        }
        "clear" => {
            arity(name, &args, 0, 0)?;
            l.borrow_mut().clear();
            Ok(Value::None)
        }
        _ => unreachable!("checked by has_method"),
    }
}

fn map_method(
    m: &std::rc::Rc<RefCell<Mapping>>,
    name: &str,
    args: Vec<Value>,
    kwargs: Kwargs,
) -> Result<Value, RuntimeFault> {
    if name != "update" {
        no_kwargs(name, &kwargs)?;
    }
    match name {
        "items" => {
            arity(name, &args, 0, 0)?;
            Ok(Value::list(
                m.borrow()
                    .items()
                    .map(|(k, v)| Value::tuple(vec![k.clone(), v.clone()]))
                    .collect(),
            ))
        }
        "keys" => {
            arity(name, &args, 0, 0)?;
            Ok(Value::list(m.borrow().keys().cloned().collect()))
        }
        "values" => {
            arity(name, &args, 0, 0)?;
            Ok(Value::list(m.borrow().values().cloned().collect()))
        }
        "get" => {
            arity(name, &args, 1, 2)?;
            let key = hash_key(&args[0])?;
            Ok(m.borrow()
                .get(&key)
                .cloned()
                .unwrap_or_else(|| args.get(1).cloned().unwrap_or(Value::None)))
        }
        "update" => {
            arity(name, &args, 0, 1)?;
            let src = call_builtin("dict", args, kwargs, &mut |_| Ok(()))?;
            let Value::Map(src) = src else { unreachable!() };
            let src = src.borrow().clone();
            let mut dst = m.borrow_mut();
            for (k, v) in src.items() {
                dst.insert(hash_key(k)?, k.clone(), v.clone());
            }
            Ok(Value::None)
        }
        "pop" => {
            arity(name, &args, 1, 2)?;
            let key = hash_key(&args[0])?;
            match m.borrow_mut().remove(&key) {
                Some(v) => Ok(v),
                None => args
                    .get(1)
                    .cloned()
                    .ok_or_else(|| RuntimeFault::with_arg("KeyError", args[0].repr())),
            }
        }
        "setdefault" => {
            arity(name, &args, 1, 2)?;
            let key = hash_key(&args[0])?;
            let mut map = m.borrow_mut();
            if let Some(v) = map.get(&key) {
                return Ok(v.clone());
            }
            let v = args.get(1).cloned().unwrap_or(Value::None);
            map.insert(key, args[0].clone(), v.clone());
            Ok(v)
        }
        "copy" => {
            arity(name, &args, 0, 0)?;
            Ok(Value::map(m.borrow().clone()))
        }
        "clear" => {
            arity(name, &args, 0, 0)?;
            *m.borrow_mut() = Mapping::new();
            Ok(Value::None)
        }
        _ => unreachable!("checked by has_method"),
    }
}

fn char_index(s: &str, byte: usize) -> i64 {
    s[..byte].chars().count() as i64
}

fn text_method(s: &str, name: &str, args: Vec<Value>, kwargs: Kwargs) -> Result<Value, RuntimeFault> {
    if !matches!(name, "split" | "format") {
        no_kwargs(name, &kwargs)?;
    }
    let text = |v: &str| Ok(Value::text(v));
    match name {
        "lower" => text(&s.to_lowercase()),
        "upper" => text(&s.to_uppercase()),
        "strip" | "lstrip" | "rstrip" => {
            arity(name, &args, 0, 1)?;
            let chars: Option<Vec<char>> = match args.first() {
                None | Some(Value::None) => None,
                Some(v) => Some(text_arg(&format!("{name} arg"), v)?.chars().collect()),
            };
            let pred = |c: char| match &chars {
                Some(set) => set.contains(&c),
                None => c.is_whitespace(),
            };
            text(match name {
                "strip" => s.trim_matches(pred),
                "lstrip" => s.trim_start_matches(pred),
                _ => s.trim_end_matches(pred),
            })
        }
        "split" => {
            let kwargs = take_kwargs(name, kwargs, &["sep", "maxsplit"])?;
            arity(name, &args, 0, 2)?;
            let sep = args.first().or(kwarg(&kwargs, "sep")).filter(|v| !matches!(v, Value::None));
            let maxsplit = match args.get(1).or(kwarg(&kwargs, "maxsplit")) {
                Some(v) => int_arg(v)?,
                None => -1,
            };
            let parts: Vec<Value> = match sep {
                None => {
                    let mut out = Vec::new();
                    let mut rest = s.trim_start();
                    while !rest.is_empty() {
                        if maxsplit >= 0 && out.len() as i64 == maxsplit {
                            out.push(Value::text(rest));
                            break;
                        }
                        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
                        out.push(Value::text(&rest[..end]));
                        rest = rest[end..].trim_start();
                    }
                    out
                }
                Some(sep) => {
                    let sep = text_arg("must be str or None, not", sep).map_err(|_| {
                        fault("TypeError", format!("must be str or None, not {}", sep.type_name()))
                    })?;
                    if sep.is_empty() {
                        return Err(fault("ValueError", "empty separator"));
                    }
                    if maxsplit >= 0 {
                        s.splitn(maxsplit as usize + 1, sep).map(Value::text).collect()
                    } else {
                        s.split(sep).map(Value::text).collect()
                    }
                }
            };
            Ok(Value::list(parts))
        }
        "splitlines" => {
            arity(name, &args, 0, 0)?;
            Ok(Value::list(s.lines().map(Value::text).collect()))
        }
        "join" => {
            arity(name, &args, 1, 1)?;
            let items = iterate(&args[0])?;
            let mut parts = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                match item {
                    Value::Text(t) => parts.push(t.to_string()),
                    other => {
                        return Err(fault(
                            "TypeError",
                            format!("sequence item {i}: expected str instance, {} found", other.type_name()),
                        ))
                    }
                }
            }
            text(&parts.join(s))
        }
        "replace" => {
            arity(name, &args, 2, 3)?;
            let old = text_arg("replace() argument 1", &args[0])?;
            let new = text_arg("replace() argument 2", &args[1])?;
            match args.get(2) {
                Some(n) => {
                    let n = int_arg(n)?;
                    if n < 0 {
                        text(&s.replace(old, new))
                    } else {
                        text(&s.replacen(old, new, n as usize))
                    }
                }
                None => text(&s.replace(old, new)),
            }
        }
        "startswith" | "endswith" => {
            arity(name, &args, 1, 1)?;
            let candidates: Vec<Value> = match &args[0] {
                Value::Tuple(t) => t.as_ref().clone(),
                v => vec![v.clone()],
            };
            let mut hit = false;
            for c in &candidates {
                let c = c.as_text().ok_or_else(|| {
                    fault(
                        "TypeError",
                        format!("{name} first arg must be str or a tuple of str, not {}", c.type_name()),
                    )
                })?;
                hit |= if name == "startswith" { s.starts_with(c) } else { s.ends_with(c) };
            }
            Ok(Value::Bool(hit))
        }
        "find" | "index" => {
            arity(name, &args, 1, 1)?;
            let sub = text_arg("must be str, not", &args[0]).map_err(|_| {
                fault("TypeError", format!("must be str, not {}", args[0].type_name()))
            })?;
            match s.find(sub) {
                Some(b) => Ok(Value::Int(char_index(s, b))),
                None if name == "find" => Ok(Value::Int(-1)),
                None => Err(fault("ValueError", "substring not found")),
            }
        }
        "count" => {
            arity(name, &args, 1, 1)?;
            let sub = text_arg("must be str, not", &args[0]).map_err(|_| {
                fault("TypeError", format!("must be str, not {}", args[0].type_name()))
            })?;
            let n = if sub.is_empty() {
                s.chars().count() + 1
            } else {
                s.matches(sub).count()
            };
            Ok(Value::Int(n as i64))
        }
        "title" => {
            let mut out = String::with_capacity(s.len());
            let mut prev_cased = false;
            for c in s.chars() {
                if c.is_alphabetic() {
                    if prev_cased {
                        out.extend(c.to_lowercase());
                    } else {
                        out.extend(c.to_uppercase());
                    }
                    prev_cased = true;
                } else {
                    out.push(c);
                    prev_cased = false;
                }
            }
            text(&out)
        }
        "capitalize" => {
            let mut chars = s.chars();
            let out: String = match chars.next() {
                Some(f) => f.to_uppercase().chain(chars.flat_map(char::to_lowercase)).collect(),
                None => String::new(),
            };
            text(&out)
        }
        "isdigit" => Ok(Value::Bool(!s.is_empty() && s.chars().all(|c| c.is_ascii_digit()))),
        "isalpha" => Ok(Value::Bool(!s.is_empty() && s.chars().all(char::is_alphabetic))),
        "format" => {
            // Positional `{}` / `{0}` and keyword `{name}` fields.
            let mut out = String::new();
            let mut auto = 0usize;
            let mut chars = s.chars().peekable();
            while let Some(c) = chars.next() {
                match c {
                    '{' if chars.peek() == Some(&'{') => {
                        chars.next();
                        out.push('{');
                    }
                    '}' if chars.peek() == Some(&'}') => {
                        chars.next();
                        out.push('}');
                    }
                    '{' => {
                        let mut field = String::new();
                        for c in chars.by_ref() {
                            if c == '}' {
                                break;
                            }
                            field.push(c);
                        }
                        let (key, spec) = field.split_once(':').unwrap_or((&field, ""));
                        let v = if key.is_empty() {
                            auto += 1;
                            args.get(auto - 1)
                        } else if let Ok(i) = key.parse::<usize>() {
                            args.get(i)
                        } else {
                            kwarg(&kwargs, key)
                        };
                        let v = v.ok_or_else(|| {
                            fault("IndexError", "Replacement index out of range for positional args tuple")
                        })?;
                        out.push_str(&ops::format_spec(v, spec)?);
                    }
                    c => out.push(c),
                }
            }
            text(&out)
        }
        _ => unreachable!("checked by has_method"),
    }
}
