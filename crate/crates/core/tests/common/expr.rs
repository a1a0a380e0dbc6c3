//! Random pure expressions, a printer with minimal parentheses, and an
//! independent evaluator following Python semantics (with 64-bit ints that
//! raise OverflowError instead of growing).

use std::cmp::Ordering;
use std::fmt::Write as _;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use replplan_core::interp::{evaluate_block, CallLedger, ExecOutcome, Scope, Value};
use replplan_core::mlang::{parse_block, SourceBlock};

#[derive(Debug, Clone)]
pub enum X {
    Int(i64),
    /// Literal text as written, e.g. "2.5" or "1e-3".
    Float(&'static str),
    Str(&'static str),
    Bool(bool),
    Null,
    Neg(Box<X>),
    Not(Box<X>),
    Bin(&'static str, Box<X>, Box<X>),
    /// Integer literal exponent.
    Pow(Box<X>, i64),
    Cmp(Vec<&'static str>, Vec<X>),
    And(Box<X>, Box<X>),
    Or(Box<X>, Box<X>),
    List(Vec<X>),
    Map(Vec<(X, X)>),
    Call(&'static str, Vec<X>),
    Index(Box<X>, Box<X>),
}

const FLOATS: &[&str] = &["0.5", "2.5", "3.0", "0.1", "1e-3", "7.25", "0.0", "1000000.0", "1e20"];
const STRS: &[&str] = &["", "a", "bc", "abc", "x y", "B"];
const BIG: &[i64] = &[1 << 40, 1 << 62, 9_007_199_254_740_993];

fn leaf() -> impl Strategy<Value = X> {
    prop_oneof![
        6 => (-12i64..=12).prop_map(X::Int),
        1 => prop::sample::select(BIG).prop_map(X::Int),
        3 => prop::sample::select(FLOATS).prop_map(X::Float),
        3 => prop::sample::select(STRS).prop_map(X::Str),
        1 => any::<bool>().prop_map(X::Bool),
        1 => Just(X::Null),
    ]
}

pub fn expr() -> impl Strategy<Value = X> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        let b = || inner.clone().prop_map(Box::new);
        prop_oneof![
            4 => (prop::sample::select(&["+", "-", "*", "/", "//", "%"][..]), b(), b())
                .prop_map(|(op, l, r)| X::Bin(op, l, r)),
            1 => (b(), -2i64..=4).prop_map(|(l, e)| X::Pow(l, e)),
            1 => b().prop_map(X::Neg),
            1 => b().prop_map(X::Not),
            2 => (prop::collection::vec(
                    prop::sample::select(&["<", "<=", "==", "!=", ">", ">=", "in", "not in"][..]), 1..3),
                  prop::collection::vec(inner.clone(), 3))
                .prop_map(|(ops, mut xs)| { xs.truncate(ops.len() + 1); X::Cmp(ops, xs) }),
            1 => (b(), b()).prop_map(|(l, r)| X::And(l, r)),
            1 => (b(), b()).prop_map(|(l, r)| X::Or(l, r)),
            1 => prop::collection::vec(inner.clone(), 0..4).prop_map(X::List),
            1 => prop::collection::vec((inner.clone(), inner.clone()), 0..3).prop_map(X::Map),
            1 => (prop::sample::select(&["len", "abs", "str"][..]), inner.clone())
                .prop_map(|(f, a)| X::Call(f, vec![a])),
            1 => (prop::sample::select(&["min", "max"][..]), inner.clone(), inner.clone())
                .prop_map(|(f, a, c)| X::Call(f, vec![a, c])),
            1 => (b(), b()).prop_map(|(s, i)| X::Index(s, i)),
        ]
    })
}

// Binding strength, loosest first.
fn prec(x: &X) -> u8 {
    match x {
        X::Or(..) => 2,
        X::And(..) => 3,
        X::Not(..) => 4,
        X::Cmp(..) => 5,
        X::Bin("+" | "-", ..) => 7,
        X::Bin(..) => 8,
        X::Neg(..) => 9,
        X::Int(i) if *i < 0 => 9,
        X::Pow(..) => 10,
        _ => 11,
    }
}

fn wrap(x: &X, min: u8, out: &mut String) {
    if prec(x) < min {
        out.push('(');
        render_into(x, out);
        out.push(')');
    } else {
        render_into(x, out);
    }
}

pub fn render(x: &X) -> String {
    let mut s = String::new();
    render_into(x, &mut s);
    s
}

fn render_into(x: &X, out: &mut String) {
    match x {
        X::Int(i) => write!(out, "{i}").unwrap(),
        X::Float(f) => out.push_str(f),
        X::Str(s) => write!(out, "'{s}'").unwrap(),
        X::Bool(b) => out.push_str(if *b { "True" } else { "False" }),
        X::Null => out.push_str("None"),
        X::Neg(a) => {
            out.push('-');
            wrap(a, 9, out);
        }
        X::Not(a) => {
            out.push_str("not ");
            wrap(a, 4, out);
        }
        X::Bin(op, l, r) => {
            let p = prec(x);
            wrap(l, p, out);
            write!(out, " {op} ").unwrap();
            wrap(r, p + 1, out);
        }
        X::Pow(l, e) => {
            wrap(l, 11, out);
            write!(out, " ** {e}").unwrap();
        }
        X::Cmp(ops, xs) => {
            wrap(&xs[0], 6, out);
            for (op, r) in ops.iter().zip(&xs[1..]) {
                write!(out, " {op} ").unwrap();
                wrap(r, 6, out);
            }
        }
        X::And(l, r) => {
            wrap(l, 3, out);
            out.push_str(" and ");
            wrap(r, 4, out);
        }
        X::Or(l, r) => {
            wrap(l, 2, out);
            out.push_str(" or ");
            wrap(r, 3, out);
        }
        X::List(items) => {
            out.push('[');
            for (i, a) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_into(a, out);
            }
            out.push(']');
        }
        X::Map(items) => {
            out.push('{');
            for (i, (k, v)) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_into(k, out);
                out.push_str(": ");
                render_into(v, out);
            }
            out.push('}');
        }
        X::Call(f, args) => {
            write!(out, "{f}(").unwrap();
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_into(a, out);
            }
            out.push(')');
        }
        X::Index(s, i) => {
            wrap(s, 11, out);
            out.push('[');
            render_into(i, out);
            out.push(']');
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum O {
    Null,
    Bool(bool),
    Int(i128),
    Float(f64),
    Str(String),
    List(Vec<O>),
    Map(Vec<(O, O)>),
}

/// Normalized mapping key: `1`, `1.0` and `True` share a slot.
#[derive(Debug, PartialEq)]
enum K {
    Null,
    Int(i128),
    Float(u64),
    Str(String),
}

fn key(o: &O) -> Result<K, &'static str> {
    Ok(match o {
        O::Null => K::Null,
        O::Bool(b) => K::Int(*b as i128),
        O::Int(i) => K::Int(*i),
        O::Float(f) if f.fract() == 0.0 && f.abs() < 1e30 => K::Int(*f as i128),
        O::Float(f) => K::Float(f.to_bits()),
        O::Str(s) => K::Str(s.clone()),
        O::List(_) | O::Map(_) => return Err("TypeError"),
    })
}

type R = Result<O, &'static str>;

fn int(v: i128) -> R {
    if v < i64::MIN as i128 || v > i64::MAX as i128 {
        Err("OverflowError")
    } else {
        Ok(O::Int(v))
    }
}

fn as_int(o: &O) -> Option<i128> {
    match o {
        O::Bool(b) => Some(*b as i128),
        O::Int(i) => Some(*i),
        _ => None,
    }
}

fn as_float(o: &O) -> Option<f64> {
    match o {
        O::Float(f) => Some(*f),
        other => as_int(other).map(|i| i as f64),
    }
}

fn truthy(o: &O) -> bool {
    match o {
        O::Null => false,
        O::Bool(b) => *b,
        O::Int(i) => *i != 0,
        O::Float(f) => *f != 0.0,
        O::Str(s) => !s.is_empty(),
        O::List(l) => !l.is_empty(),
        O::Map(m) => !m.is_empty(),
    }
}

fn repr(o: &O) -> String {
    match o {
        O::Null => "None".into(),
        O::Bool(b) => if *b { "True" } else { "False" }.into(),
        O::Int(i) => i.to_string(),
        O::Float(x) => float_repr(*x),
        O::Str(s) => format!("'{s}'"),
        O::List(l) => format!("[{}]", l.iter().map(repr).collect::<Vec<_>>().join(", ")),
        O::Map(m) => format!(
            "{{{}}}",
            m.iter().map(|(k, v)| format!("{}: {}", repr(k), repr(v))).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn arith(op: &str, a: &O, b: &O) -> R {
    if let (Some(x), Some(y)) = (as_int(a), as_int(b)) {
        return match op {
            "+" => int(x + y),
            "-" => int(x - y),
            "*" => int(x * y),
            "/" if y == 0 => Err("ZeroDivisionError"),
            "/" => Ok(O::Float(x as f64 / y as f64)),
            "//" | "%" if y == 0 => Err("ZeroDivisionError"),
            "//" => int(x.div_euclid(y) - if y < 0 && x.rem_euclid(y) != 0 { 1 } else { 0 }),
            "%" => int(x - y * (x.div_euclid(y) - if y < 0 && x.rem_euclid(y) != 0 { 1 } else { 0 })),
            _ => unreachable!(),
        };
    }
    if let (Some(x), Some(y)) = (as_float(a), as_float(b)) {
        return match op {
            "+" => Ok(O::Float(x + y)),
            "-" => Ok(O::Float(x - y)),
            "*" => Ok(O::Float(x * y)),
            "/" | "//" | "%" if y == 0.0 => Err("ZeroDivisionError"),
            "/" => Ok(O::Float(x / y)),
            "//" | "%" => {
                // The remainder takes the sign of the divisor.
                let mut m = x % y;
                if m != 0.0 && (m < 0.0) != (y < 0.0) {
                    m += y;
                }
                if op == "%" {
                    return Ok(O::Float(if m == 0.0 { 0.0f64.copysign(y) } else { m }));
                }
                let q = ((x - m) / y).round();
                Ok(O::Float(if q == 0.0 { 0.0f64.copysign(x / y) } else { q }))
            }
            _ => unreachable!(),
        };
    }
    match (op, a, b) {
        ("+", O::Str(x), O::Str(y)) => Ok(O::Str(format!("{x}{y}"))),
        ("*", O::Str(s), n) | ("*", n, O::Str(s)) if as_int(n).is_some() => {
            let n = as_int(n).unwrap().max(0);
            if s.len() as i128 * n > 10_000_000 {
                return Err("MemoryError");
            }
            Ok(O::Str(s.repeat(n as usize)))
        }
        ("+", O::List(x), O::List(y)) => Ok(O::List(x.iter().chain(y).cloned().collect())),
        ("*", O::List(l), n) | ("*", n, O::List(l)) if as_int(n).is_some() => {
            let n = as_int(n).unwrap().max(0);
            if l.len() as i128 * n > 10_000_000 {
                return Err("MemoryError");
            }
            Ok(O::List((0..n).flat_map(|_| l.iter().cloned()).collect()))
        }
        _ => Err("TypeError"),
    }
}

fn pow(a: &O, e: i64) -> R {
    if let Some(x) = as_int(a) {
        if e < 0 {
            return if x == 0 { Err("ZeroDivisionError") } else { Ok(O::Float((x as f64).powi(e as i32))) };
        }
        let mut acc: i128 = 1;
        for _ in 0..e {
            acc = acc.checked_mul(x).ok_or("OverflowError")?;
            if acc.abs() > i64::MAX as i128 + 1 {
                return Err("OverflowError");
            }
        }
        return int(acc);
    }
    match a {
        O::Float(x) if *x == 0.0 && e < 0 => Err("ZeroDivisionError"),
        O::Float(x) => Ok(O::Float(x.powf(e as f64))),
        _ => Err("TypeError"),
    }
}

/// Exact numeric ordering, including ints beyond 2**53 against floats.
fn num_cmp(a: &O, b: &O) -> Option<Ordering> {
    match (a, b) {
        (O::Float(x), O::Float(y)) => x.partial_cmp(y),
        (O::Float(_), _) => num_cmp(b, a).map(Ordering::reverse),
        (_, O::Float(y)) => {
            let i = as_int(a)?;
            if y.is_nan() {
                None
            } else if y.fract() == 0.0 && y.abs() < 1e30 {
                Some(i.cmp(&(*y as i128)))
            } else if y.abs() >= 1e30 {
                Some(if *y > 0.0 { Ordering::Less } else { Ordering::Greater })
            } else {
                // Non-integral floats are below 2**53 in magnitude.
                (i as f64).partial_cmp(y)
            }
        }
        _ => Some(as_int(a)?.cmp(&as_int(b)?)),
    }
}

fn py_eq(a: &O, b: &O) -> bool {
    match (a, b) {
        (O::Null, O::Null) => true,
        (O::Str(x), O::Str(y)) => x == y,
        (O::List(x), O::List(y)) => x.len() == y.len() && x.iter().zip(y).all(|(a, b)| py_eq(a, b)),
        (O::Map(x), O::Map(y)) => {
            x.len() == y.len()
                && x.iter().all(|(k, v)| {
                    let hk = key(k).unwrap();
                    y.iter().any(|(k2, v2)| key(k2).unwrap() == hk && py_eq(v, v2))
                })
        }
        _ if as_float(a).is_some() && as_float(b).is_some() => num_cmp(a, b) == Some(Ordering::Equal),
        _ => false,
    }
}

fn order(a: &O, b: &O) -> Result<Ordering, &'static str> {
    match (a, b) {
        (O::Str(x), O::Str(y)) => Ok(x.cmp(y)),
        (O::List(x), O::List(y)) => {
            for (a, b) in x.iter().zip(y) {
                if !py_eq(a, b) {
                    return order(a, b);
                }
            }
            Ok(x.len().cmp(&y.len()))
        }
        _ if as_float(a).is_some() && as_float(b).is_some() => num_cmp(a, b).ok_or("ValueError"),
        _ => Err("TypeError"),
    }
}

fn compare(op: &str, a: &O, b: &O) -> Result<bool, &'static str> {
    Ok(match op {
        "==" => py_eq(a, b),
        "!=" => !py_eq(a, b),
        "in" | "not in" => {
            let found = match (a, b) {
                (O::Str(n), O::Str(h)) => h.contains(n.as_str()),
                (_, O::List(l)) => l.iter().any(|x| py_eq(x, a)),
                (_, O::Map(m)) => {
                    let hk = key(a)?;
                    m.iter().any(|(k, _)| key(k).unwrap() == hk)
                }
                _ => return Err("TypeError"),
            };
            found == (op == "in")
        }
        _ => {
            let o = order(a, b)?;
            match op {
                "<" => o == Ordering::Less,
                "<=" => o != Ordering::Greater,
                ">" => o == Ordering::Greater,
                _ => o != Ordering::Less,
            }
        }
    })
}

/// Python `repr` of a float: shortest round-trip digits, positional for
/// exponents in [-4, 16), scientific otherwise.
pub fn float_repr(f: f64) -> String {
    if f.is_nan() {
        return "nan".into();
    }
    if f.is_infinite() {
        return if f > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{:e}", f.abs());
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let sign = if f.is_sign_negative() { "-" } else { "" };
    if (-4..16).contains(&exp) {
        let body = if exp < 0 {
            format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
        } else {
            let point = exp as usize + 1;
            if digits.len() <= point {
                format!("{digits}{}.0", "0".repeat(point - digits.len()))
            } else {
                format!("{}.{}", &digits[..point], &digits[point..])
            }
        };
        format!("{sign}{body}")
    } else {
        let m = if digits.len() == 1 { digits.clone() } else { format!("{}.{}", &digits[..1], &digits[1..]) };
        format!("{sign}{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

pub fn eval(x: &X) -> R {
    match x {
        X::Int(i) => Ok(O::Int(*i as i128)),
        X::Float(f) => Ok(O::Float(f.parse().unwrap())),
        X::Str(s) => Ok(O::Str(s.to_string())),
        X::Bool(b) => Ok(O::Bool(*b)),
        X::Null => Ok(O::Null),
        X::Neg(a) => match eval(a)? {
            O::Float(f) => Ok(O::Float(-f)),
            o => int(-as_int(&o).ok_or("TypeError")?),
        },
        X::Not(a) => Ok(O::Bool(!truthy(&eval(a)?))),
        X::Bin(op, l, r) => {
            let a = eval(l)?;
            let b = eval(r)?;
            arith(op, &a, &b)
        }
        X::Pow(l, e) => pow(&eval(l)?, *e),
        X::Cmp(ops, xs) => {
            let mut left = eval(&xs[0])?;
            for (op, rx) in ops.iter().zip(&xs[1..]) {
                let right = eval(rx)?;
                if !compare(op, &left, &right)? {
                    return Ok(O::Bool(false));
                }
                left = right;
            }
            Ok(O::Bool(true))
        }
        X::And(l, r) => {
            let a = eval(l)?;
            if truthy(&a) { eval(r) } else { Ok(a) }
        }
        X::Or(l, r) => {
            let a = eval(l)?;
            if truthy(&a) { Ok(a) } else { eval(r) }
        }
        X::List(items) => Ok(O::List(items.iter().map(eval).collect::<Result<_, _>>()?)),
        X::Map(items) => {
            // Every key and value is evaluated before any key is hashed.
            let mut pairs = Vec::new();
            for (k, v) in items {
                pairs.push((eval(k)?, eval(v)?));
            }
            let mut out: Vec<(O, O)> = Vec::new();
            for (k, v) in pairs {
                let hk = key(&k)?;
                match out.iter_mut().find(|(o, _)| key(o).unwrap() == hk) {
                    Some(slot) => slot.1 = v,
                    None => out.push((k, v)),
                }
            }
            Ok(O::Map(out))
        }
        X::Call(f, args) => {
            let vals = args.iter().map(eval).collect::<Result<Vec<_>, _>>()?;
            call(f, &vals)
        }
        X::Index(s, i) => {
            let s = eval(s)?;
            let i = eval(i)?;
            if let O::Map(m) = &s {
                let hk = key(&i)?;
                return m.iter().find(|(k, _)| key(k).unwrap() == hk).map(|(_, v)| v.clone()).ok_or("KeyError");
            }
            let items: Vec<O> = match s {
                O::Str(s) => s.chars().map(|c| O::Str(c.to_string())).collect(),
                O::List(l) => l,
                _ => return Err("TypeError"),
            };
            let i = as_int(&i).ok_or("TypeError")?;
            let n = items.len() as i128;
            let k = if i < 0 { i + n } else { i };
            if k < 0 || k >= n {
                return Err("IndexError");
            }
            Ok(items[k as usize].clone())
        }
    }
}

fn call(f: &str, a: &[O]) -> R {
    match f {
        "len" => match &a[0] {
            O::Str(s) => Ok(O::Int(s.chars().count() as i128)),
            O::List(l) => Ok(O::Int(l.len() as i128)),
            O::Map(m) => Ok(O::Int(m.len() as i128)),
            _ => Err("TypeError"),
        },
        "abs" => match &a[0] {
            O::Float(x) => Ok(O::Float(x.abs())),
            o => int(as_int(o).ok_or("TypeError")?.abs()),
        },
        "str" => Ok(O::Str(match &a[0] {
            O::Str(s) => s.clone(),
            other => repr(other),
        })),
        "min" => Ok(if order(&a[1], &a[0])? == Ordering::Less { a[1].clone() } else { a[0].clone() }),
        "max" => Ok(if order(&a[1], &a[0])? == Ordering::Greater { a[1].clone() } else { a[0].clone() }),
        _ => unreachable!(),
    }
}

/// Runs `r = <expr>` through the interpreter.
pub fn interpret(src: &str) -> Result<Value, String> {
    let stmt = parse_block(&SourceBlock::test(format!("r = {src}")))
        .map_err(|d| format!("syntax error: {}", d.message))?;
    let mut scope = Scope::new();
    match evaluate_block(&stmt, &mut scope, &mut CallLedger::new()) {
        ExecOutcome::Completed { .. } => Ok(scope.get("r").cloned().expect("r bound")),
        ExecOutcome::Failed { fault, .. } => Err(fault.kind),
        other => Err(format!("unexpected outcome {other:?}")),
    }
}

fn close(x: f64, y: f64) -> bool {
    x == y || (x.is_nan() && y.is_nan()) || (x - y).abs() <= 1e-12 * x.abs().max(y.abs())
}

/// Compares interpreter and oracle on one expression.
pub fn check(x: &X) -> Result<(), String> {
    let src = render(x);
    let want = eval(x);
    let got = interpret(&src);
    let same = match (&want, &got) {
        (Err(a), Err(b)) => a == b,
        (Ok(O::Null), Ok(Value::None)) => true,
        (Ok(O::Bool(a)), Ok(Value::Bool(b))) => a == b,
        (Ok(O::Int(a)), Ok(Value::Int(b))) => *a == *b as i128,
        (Ok(O::Float(a)), Ok(Value::Float(b))) => close(*a, *b),
        (Ok(O::Str(a)), Ok(Value::Text(b))) => a.as_str() == b.as_ref(),
        // Containers: structure and scalars through their reprs, floats
        // included, since both sides format floats the same way.
        (Ok(o @ (O::List(_) | O::Map(_))), Ok(v)) => repr(o) == v.repr(),
        _ => false,
    };
    if same {
        Ok(())
    } else {
        Err(format!("{src}\n  oracle: {want:?}\n  interpreter: {:?}", got.map(|v| v.repr())))
    }
}

/// Runs `cases` deterministic random expressions through [`check`].
pub fn differential(cases: u32) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let mut runner = TestRunner::new_with_rng(config, rng);
    runner
        .run(&expr(), |x| check(&x).map_err(TestCaseError::fail))
        .map_err(|e| e.to_string())
}
