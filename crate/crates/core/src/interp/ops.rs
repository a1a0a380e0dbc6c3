//! Operators, indexing and formatting over the value universe, with Python
//! semantics and Python-styled error messages.

use std::cmp::Ordering;

use super::fault::{fault, RuntimeFault};
use super::value::{HashKey, Value};
use crate::mlang::ast::{BinOp, CmpOp};

/// Largest text or list a single operation may build.
const MAX_SIZE: usize = 10_000_000;

fn unsupported(op: &str, a: &Value, b: &Value) -> RuntimeFault {
    fault(
        "TypeError",
        format!(
            "unsupported operand type(s) for {op}: '{}' and '{}'",
            a.type_name(),
            b.type_name()
        ),
    )
}

fn overflow() -> RuntimeFault {
    fault("OverflowError", "integer overflow")
}

fn is_num(v: &Value) -> bool {
    matches!(v, Value::Bool(_) | Value::Int(_) | Value::Float(_))
}

fn is_int(v: &Value) -> bool {
    matches!(v, Value::Bool(_) | Value::Int(_))
}

pub fn binop(op: BinOp, a: &Value, b: &Value) -> Result<Value, RuntimeFault> {
    if is_int(a) && is_int(b) {
        return int_binop(op, a.as_int().unwrap(), b.as_int().unwrap());
    }
    if is_num(a) && is_num(b) {
        return float_binop(op, a.as_f64().unwrap(), b.as_f64().unwrap());
    }
    match (op, a, b) {
        (BinOp::Add, Value::Text(x), Value::Text(y)) => {
            check_size(x.len() + y.len())?;
            Ok(Value::text(format!("{x}{y}")))
        }
        (BinOp::Add, Value::Text(_), other) => Err(fault(
            "TypeError",
            format!("can only concatenate str (not \"{}\") to str", other.type_name()),
        )),
        (BinOp::Add, Value::List(x), Value::List(y)) => {
            let mut items = x.borrow().clone();
            items.extend(y.borrow().iter().cloned());
            check_size(items.len())?;
            Ok(Value::list(items))
        }
        (BinOp::Add, Value::List(_), other) => Err(fault(
            "TypeError",
            format!("can only concatenate list (not \"{}\") to list", other.type_name()),
        )),
        (BinOp::Add, Value::Tuple(x), Value::Tuple(y)) => {
            let mut items = x.as_ref().clone();
            items.extend(y.iter().cloned());
            Ok(Value::tuple(items))
        }
        (BinOp::Mul, Value::Text(s), n) | (BinOp::Mul, n, Value::Text(s)) if is_int(n) => {
            let n = n.as_int().unwrap().max(0) as usize;
            check_size(s.len().saturating_mul(n))?;
            Ok(Value::text(s.repeat(n)))
        }
        (BinOp::Mul, Value::List(l), n) | (BinOp::Mul, n, Value::List(l)) if is_int(n) => {
            let n = n.as_int().unwrap().max(0) as usize;
            let items = l.borrow();
            check_size(items.len().saturating_mul(n))?;
            let mut out = Vec::with_capacity(items.len() * n);
            for _ in 0..n {
                out.extend(items.iter().cloned());
            }
            Ok(Value::list(out))
        }
        (BinOp::Mod, Value::Text(_), _) => Err(fault(
            "TypeError",
            "printf-style formatting is not supported",
        )),
        _ => Err(unsupported(op.symbol(), a, b)),
    }
}

fn check_size(n: usize) -> Result<(), RuntimeFault> {
    if n > MAX_SIZE {
        Err(fault("MemoryError", "result too large"))
    } else {
        Ok(())
    }
}

fn int_binop(op: BinOp, x: i64, y: i64) -> Result<Value, RuntimeFault> {
    let v = match op {
        BinOp::Add => x.checked_add(y).ok_or_else(overflow)?,
        BinOp::Sub => x.checked_sub(y).ok_or_else(overflow)?,
        BinOp::Mul => x.checked_mul(y).ok_or_else(overflow)?,
        BinOp::Div => {
            if y == 0 {
                return Err(fault("ZeroDivisionError", "division by zero"));
            }
            return Ok(Value::Float(x as f64 / y as f64));
        }
        BinOp::FloorDiv => {
            if y == 0 {
                return Err(fault("ZeroDivisionError", "integer division or modulo by zero"));
            }
            let q = x.checked_div(y).ok_or_else(overflow)?;
            if (x % y != 0) && ((x < 0) != (y < 0)) {
                q - 1
            } else {
                q
            }
        }
        BinOp::Mod => {
            if y == 0 {
                return Err(fault("ZeroDivisionError", "integer division or modulo by zero"));
            }
            let r = x.checked_rem(y).unwrap_or(0);
            if r != 0 && ((r < 0) != (y < 0)) {
                r + y
            } else {
                r
            }
        }
        BinOp::Pow => {
            if y < 0 {
                if x == 0 {
                    return Err(fault(
                        "ZeroDivisionError",
                        "0.0 cannot be raised to a negative power",
                    ));
                }
                return Ok(Value::Float((x as f64).powf(y as f64)));
            }
            let exp = u32::try_from(y).map_err(|_| overflow())?;
            x.checked_pow(exp).ok_or_else(overflow)?
        }
    };
    Ok(Value::Int(v))
}

fn float_binop(op: BinOp, x: f64, y: f64) -> Result<Value, RuntimeFault> {
    let v = match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div => {
            if y == 0.0 {
                return Err(fault("ZeroDivisionError", "float division by zero"));
            }
            x / y
        }
        BinOp::FloorDiv | BinOp::Mod => {
            if y == 0.0 {
                let msg = if op == BinOp::Mod { "float modulo" } else { "float floor division by zero" };
                return Err(fault("ZeroDivisionError", msg));
            }
            let (div, m) = float_divmod(x, y);
            if op == BinOp::Mod {
                m
            } else {
                div
            }
        }
        BinOp::Pow => {
            if x == 0.0 && y < 0.0 {
                return Err(fault(
                    "ZeroDivisionError",
                    "0.0 cannot be raised to a negative power",
                ));
            }
            if x < 0.0 && y.fract() != 0.0 {
                return Err(fault(
                    "ValueError",
                    "complex results are not supported",
                ));
            }
            let r = x.powf(y);
            if r.is_infinite() && x.is_finite() && y.is_finite() {
                return Err(fault("OverflowError", "(34, 'Numerical result out of range')"));
            }
            r
        }
    };
    Ok(Value::Float(v))
}

/// CPython's float floor-division and modulo.
fn float_divmod(vx: f64, wx: f64) -> (f64, f64) {
    let mut m = vx % wx;
    let mut div = (vx - m) / wx;
    if m != 0.0 {
        if (wx < 0.0) != (m < 0.0) {
            m += wx;
            div -= 1.0;
        }
    } else {
        m = 0.0f64.copysign(wx);
    }
    let floordiv = if div != 0.0 {
        let mut f = div.floor();
        if div - f > 0.5 {
            f += 1.0;
        }
        f
    } else {
        0.0f64.copysign(vx / wx)
    };
    (floordiv, m)
}

pub fn negate(v: &Value) -> Result<Value, RuntimeFault> {
    match v {
        Value::Bool(_) | Value::Int(_) => Ok(Value::Int(
            v.as_int().unwrap().checked_neg().ok_or_else(overflow)?,
        )),
        Value::Float(f) => Ok(Value::Float(-f)),
        other => Err(fault(
            "TypeError",
            format!("bad operand type for unary -: '{}'", other.type_name()),
        )),
    }
}

pub fn positive(v: &Value) -> Result<Value, RuntimeFault> {
    match v {
        Value::Bool(_) | Value::Int(_) => Ok(Value::Int(v.as_int().unwrap())),
        Value::Float(f) => Ok(Value::Float(*f)),
        other => Err(fault(
            "TypeError",
            format!("bad operand type for unary +: '{}'", other.type_name()),
        )),
    }
}

/// Ordering for `<`-family operators; TypeError for incomparable types.
pub fn order(op: &str, a: &Value, b: &Value) -> Result<Ordering, RuntimeFault> {
    let err = || {
        fault(
            "TypeError",
            format!(
                "'{op}' not supported between instances of '{}' and '{}'",
                a.type_name(),
                b.type_name()
            ),
        )
    };
    match (a, b) {
        _ if is_int(a) && is_int(b) => Ok(a.as_int().cmp(&b.as_int())),
        (Value::Float(x), Value::Float(y)) => {
            x.partial_cmp(y).ok_or_else(|| fault("ValueError", "nan comparison"))
        }
        (Value::Float(x), i) => int_float_cmp(i.as_int().ok_or_else(err)?, *x)
            .map(Ordering::reverse)
            .ok_or_else(|| fault("ValueError", "nan comparison")),
        (i, Value::Float(y)) => int_float_cmp(i.as_int().ok_or_else(err)?, *y)
            .ok_or_else(|| fault("ValueError", "nan comparison")),
        (Value::Text(x), Value::Text(y)) => Ok(x.as_ref().cmp(y.as_ref())),
        (Value::List(x), Value::List(y)) => seq_order(op, &x.borrow(), &y.borrow()),
        (Value::Tuple(x), Value::Tuple(y)) => seq_order(op, x, y),
        _ => Err(err()),
    }
}

/// Exact int/float ordering; large ints are not rounded to the nearest float.
fn int_float_cmp(i: i64, f: f64) -> Option<Ordering> {
    if f.is_nan() {
        return None;
    }
    if f >= 9.223372036854776e18 {
        return Some(Ordering::Less);
    }
    if f < -9.223372036854776e18 {
        return Some(Ordering::Greater);
    }
    let t = f.trunc();
    Some(i.cmp(&(t as i64)).then_with(|| 0.0.partial_cmp(&(f - t)).unwrap_or(Ordering::Equal)))
}

fn seq_order(op: &str, a: &[Value], b: &[Value]) -> Result<Ordering, RuntimeFault> {
    for (x, y) in a.iter().zip(b) {
        if !x.py_eq(y) {
            return order(op, x, y);
        }
    }
    Ok(a.len().cmp(&b.len()))
}

pub fn compare(op: CmpOp, a: &Value, b: &Value) -> Result<bool, RuntimeFault> {
    let nan = |v: &Value| matches!(v, Value::Float(f) if f.is_nan());
    Ok(match op {
        CmpOp::Eq => a.py_eq(b),
        CmpOp::Ne => !a.py_eq(b),
        CmpOp::Is => a.py_is(b),
        CmpOp::IsNot => !a.py_is(b),
        CmpOp::In => contains(b, a)?,
        CmpOp::NotIn => !contains(b, a)?,
        CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge => {
            let sym = op.to_string();
            if (nan(a) && is_num(b)) || (nan(b) && is_num(a)) {
                return Ok(false);
            }
            let ord = order(&sym, a, b)?;
            match op {
                CmpOp::Lt => ord == Ordering::Less,
                CmpOp::Le => ord != Ordering::Greater,
                CmpOp::Gt => ord == Ordering::Greater,
                _ => ord != Ordering::Less,
            }
        }
    })
}

/// `needle in container`.
pub fn contains(container: &Value, needle: &Value) -> Result<bool, RuntimeFault> {
    match container {
        Value::Text(hay) => match needle {
            Value::Text(n) => Ok(hay.contains(n.as_ref())),
            other => Err(fault(
                "TypeError",
                format!(
                    "'in <string>' requires string as left operand, not {}",
                    other.type_name()
                ),
            )),
        },
        Value::List(l) => Ok(l.borrow().iter().any(|v| v.py_eq(needle))),
        Value::Tuple(t) => Ok(t.iter().any(|v| v.py_eq(needle))),
        Value::Map(m) => {
            let key = hash_key(needle)?;
            Ok(m.borrow().contains(&key))
        }
        other => Err(fault(
            "TypeError",
            format!("argument of type '{}' is not iterable", other.type_name()),
        )),
    }
}

pub fn hash_key(v: &Value) -> Result<HashKey, RuntimeFault> {
    HashKey::of(v).ok_or_else(|| fault("TypeError", format!("unhashable type: '{}'", v.type_name())))
}

fn norm_index(i: i64, len: usize) -> Option<usize> {
    let idx = if i < 0 { i + len as i64 } else { i };
    (0..len as i64).contains(&idx).then_some(idx as usize)
}

pub fn index(container: &Value, idx: &Value) -> Result<Value, RuntimeFault> {
    let seq_index = |kind: &str, len: usize| -> Result<usize, RuntimeFault> {
        let i = idx.as_int().ok_or_else(|| {
            fault(
                "TypeError",
                format!(
                    "{kind} indices must be integers or slices, not {}",
                    idx.type_name()
                ),
            )
        })?;
        norm_index(i, len).ok_or_else(|| fault("IndexError", format!("{kind} index out of range")))
    };
    match container {
        Value::List(l) => {
            let l = l.borrow();
            Ok(l[seq_index("list", l.len())?].clone())
        }
        Value::Tuple(t) => Ok(t[seq_index("tuple", t.len())?].clone()),
        Value::Text(s) => {
            let chars: Vec<char> = s.chars().collect();
            let i = seq_index("string", chars.len())?;
            Ok(Value::text(chars[i].to_string()))
        }
        Value::Map(m) => {
            let key = hash_key(idx)?;
            m.borrow()
                .get(&key)
                .cloned()
                .ok_or_else(|| RuntimeFault::with_arg("KeyError", idx.repr()))
        }
        other => Err(fault(
            "TypeError",
            format!("'{}' object is not subscriptable", other.type_name()),
        )),
    }
}

pub fn set_index(container: &Value, idx: &Value, value: Value) -> Result<(), RuntimeFault> {
    match container {
        Value::List(l) => {
            let mut l = l.borrow_mut();
            let i = idx.as_int().ok_or_else(|| {
                fault(
                    "TypeError",
                    format!("list indices must be integers or slices, not {}", idx.type_name()),
                )
            })?;
            let len = l.len();
            let i = norm_index(i, len)
                .ok_or_else(|| fault("IndexError", "list assignment index out of range"))?;
            l[i] = value;
            Ok(())
        }
        Value::Map(m) => {
            let key = hash_key(idx)?;
            m.borrow_mut().insert(key, idx.clone(), value);
            Ok(())
        }
        other => Err(fault(
            "TypeError",
            format!(
                "'{}' object does not support item assignment",
                other.type_name()
            ),
        )),
    }
}

fn slice_bounds(lower: Option<&Value>, upper: Option<&Value>, len: usize) -> Result<(usize, usize), RuntimeFault> {
    let conv = |v: Option<&Value>, default: usize| -> Result<usize, RuntimeFault> {
        match v {
            None | Some(Value::None) => Ok(default),
            Some(v) => {
                let i = v.as_int().ok_or_else(|| {
                    fault(
                        "TypeError",
                        "slice indices must be integers or None or have an __index__ method",
                    )
                })?;
                let i = if i < 0 { i + len as i64 } else { i };
                Ok(i.clamp(0, len as i64) as usize)
            }
        }
    };
    let lo = conv(lower, 0)?;
    let hi = conv(upper, len)?;
    Ok((lo, hi.max(lo)))
}

pub fn slice(container: &Value, lower: Option<&Value>, upper: Option<&Value>) -> Result<Value, RuntimeFault> {
    match container {
        Value::List(l) => {
            let l = l.borrow();
            let (a, b) = slice_bounds(lower, upper, l.len())?;
            Ok(Value::list(l[a..b].to_vec()))
        }
        Value::Tuple(t) => {
            let (a, b) = slice_bounds(lower, upper, t.len())?;
            Ok(Value::tuple(t[a..b].to_vec()))
        }
        Value::Text(s) => {
            let chars: Vec<char> = s.chars().collect();
            let (a, b) = slice_bounds(lower, upper, chars.len())?;
            Ok(Value::text(chars[a..b].iter().collect::<String>()))
        }
        other => Err(fault(
            "TypeError",
            format!("'{}' object is not subscriptable", other.type_name()),
        )),
    }
}

/// Materializes an iterable into its items.
pub fn iterate(v: &Value) -> Result<Vec<Value>, RuntimeFault> {
    match v {
        Value::List(l) => Ok(l.borrow().clone()),
        Value::Tuple(t) => Ok(t.as_ref().clone()),
        Value::Text(s) => Ok(s.chars().map(|c| Value::text(c.to_string())).collect()),
        Value::Map(m) => Ok(m.borrow().keys().cloned().collect()),
        other => Err(fault(
            "TypeError",
            format!("'{}' object is not iterable", other.type_name()),
        )),
    }
}

/// Applies an f-string format spec: `[[fill]align][sign][0][width][,][.precision][type]`.
pub fn format_spec(v: &Value, spec: &str) -> Result<String, RuntimeFault> {
    if spec.is_empty() {
        return Ok(v.to_str());
    }
    let bad = || fault("ValueError", format!("Invalid format specifier '{spec}' for object of type '{}'", v.type_name()));
    let chars: Vec<char> = spec.chars().collect();
    let mut i = 0;
    let mut fill = ' ';
    let mut align = None;
    if chars.len() >= 2 && matches!(chars[1], '<' | '>' | '^' | '=') {
        fill = chars[0];
        align = Some(chars[1]);
        i = 2;
    } else if matches!(chars.first(), Some('<' | '>' | '^' | '=')) {
        align = Some(chars[0]);
        i = 1;
    }
    let mut sign = '-';
    if matches!(chars.get(i), Some('+' | '-' | ' ')) {
        sign = chars[i];
        i += 1;
    }
    if chars.get(i) == Some(&'0') {
        fill = '0';
        align.get_or_insert('=');
        i += 1;
    }
    let mut width = 0usize;
    while let Some(d) = chars.get(i).and_then(|c| c.to_digit(10)) {
        width = width * 10 + d as usize;
        i += 1;
    }
    let mut grouping = false;
    if chars.get(i) == Some(&',') {
        grouping = true;
        i += 1;
    }
    let mut precision = None;
    if chars.get(i) == Some(&'.') {
        i += 1;
        let mut p = 0usize;
        let start = i;
        while let Some(d) = chars.get(i).and_then(|c| c.to_digit(10)) {
            p = p * 10 + d as usize;
            i += 1;
        }
        if i == start {
            return Err(bad());
        }
        precision = Some(p);
    }
    let ty = chars.get(i).copied();
    if i + ty.map_or(0, |_| 1) != chars.len() {
        return Err(bad());
    }
    let numeric = is_num(v);
    let body = match (ty, v) {
        (Some('s') | None, Value::Text(s)) => match precision {
            Some(p) => s.chars().take(p).collect(),
            None => s.to_string(),
        },
        (Some('d'), _) if is_int(v) => v.as_int().unwrap().abs().to_string(),
        (Some('f' | 'F'), _) | (None, Value::Float(_)) if numeric && (ty.is_some() || precision.is_some()) => {
            format!("{:.*}", precision.unwrap_or(6), v.as_f64().unwrap().abs())
        }
        (Some('%'), _) if numeric => {
            format!("{:.*}%", precision.unwrap_or(6), v.as_f64().unwrap().abs() * 100.0)
        }
        (Some('e'), _) if numeric => {
            let s = format!("{:.*e}", precision.unwrap_or(6), v.as_f64().unwrap().abs());
            let (m, e) = s.split_once('e').unwrap();
            let e: i32 = e.parse().unwrap();
            format!("{m}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
        }
        (None, _) if numeric => match v {
            Value::Float(f) => crate::pyfmt::repr_float(f.abs()),
            _ => v.as_int().unwrap().abs().to_string(),
        },
        (None, _) => v.to_str(),
        _ => return Err(bad()),
    };
    let body = if grouping && numeric { group_thousands(&body) } else { body };
    let negative = numeric && v.as_f64().unwrap().is_sign_negative() && v.as_f64().unwrap() != 0.0;
    let sign_text = match (negative, sign) {
        (true, _) => "-",
        (false, '+') if numeric => "+",
        (false, ' ') if numeric => " ",
        _ => "",
    };
    let len = sign_text.chars().count() + body.chars().count();
    let pad = width.saturating_sub(len);
    let align = align.unwrap_or(if numeric { '>' } else { '<' });
    let fill_str = |n: usize| fill.to_string().repeat(n);
    Ok(match align {
        '<' => format!("{sign_text}{body}{}", fill_str(pad)),
        '^' => format!("{}{sign_text}{body}{}", fill_str(pad / 2), fill_str(pad - pad / 2)),
        '=' => format!("{sign_text}{}{body}", fill_str(pad)),
        _ => format!("{}{sign_text}{body}", fill_str(pad)),
    })
}

fn group_thousands(body: &str) -> String {
    let (int_part, rest) = match body.find(|c: char| !c.is_ascii_digit()) {
        Some(p) => body.split_at(p),
        None => (body, ""),
    };
    let mut out = String::new();
    for (i, c) in int_part.chars().enumerate() {
        if i > 0 && (int_part.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_semantics() {
        assert_eq!(int_binop(BinOp::FloorDiv, -7, 2).unwrap(), Value::Int(-4));
        assert_eq!(int_binop(BinOp::Mod, -7, 2).unwrap(), Value::Int(1));
        assert_eq!(int_binop(BinOp::Mod, 7, -2).unwrap(), Value::Int(-1));
        assert_eq!(float_binop(BinOp::Mod, -7.5, 2.0).unwrap(), Value::Float(0.5));
        assert_eq!(float_binop(BinOp::FloorDiv, -7.5, 2.0).unwrap(), Value::Float(-4.0));
    }

    #[test]
    fn format_specs() {
        assert_eq!(format_spec(&Value::Float(32.989), ".2f").unwrap(), "32.99");
        assert_eq!(format_spec(&Value::Int(5), "03d").unwrap(), "005");
        assert_eq!(format_spec(&Value::text("ab"), ">4").unwrap(), "  ab");
        assert_eq!(format_spec(&Value::Int(1234567), ",").unwrap(), "1,234,567");
        assert_eq!(format_spec(&Value::Float(0.5), ".0%").unwrap(), "50%");
        assert!(format_spec(&Value::text("x"), "d").is_err());
    }

    #[test]
    fn comparison_errors() {
        let err = compare(CmpOp::Lt, &Value::text("a"), &Value::Int(1)).unwrap_err();
        assert_eq!(
            err.to_string(),
            "TypeError(\"'<' not supported between instances of 'str' and 'int'\")"
        );
    }
}
