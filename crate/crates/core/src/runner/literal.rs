//! Canonical `repr` of object-language literal expressions, computed
//! in-process. Used by the stub runner's `eval_literal` mode.

use crate::syntax::ast::{DictItem, Expr, ExprKind, NumberValue, StrPart, UnaryOp};
use crate::syntax::parse_expression;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("not a literal: {0}")]
pub struct LiteralError(pub String);

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Int { negative: bool, digits: String },
    Float(f64),
    Str(String),
    Bytes(Vec<u8>),
    Bool(bool),
    None,
    List(Vec<Value>),
    Tuple(Vec<Value>),
    Set(Vec<Value>),
    Dict(Vec<(Value, Value)>),
}

/// Evaluates a literal expression and returns its canonical representation,
/// e.g. `[395,666,7,4]` → `[395, 666, 7, 4]` and `"a"` → `'a'`.
pub fn literal_repr(text: &str) -> Result<String, LiteralError> {
    let expr = parse_expression(text.trim()).map_err(|e| LiteralError(e.message))?;
    Ok(repr(&eval(&expr)?))
}

fn err(what: &str) -> LiteralError {
    LiteralError(what.to_string())
}

fn eval(e: &Expr) -> Result<Value, LiteralError> {
    use ExprKind as K;
    Ok(match &e.kind {
        K::Paren(inner) => eval(inner)?,
        K::Number(n) => match n.value {
            NumberValue::Int(Some(v)) => Value::Int {
                negative: false,
                digits: v.to_string(),
            },
            NumberValue::Int(None) => {
                let digits: String = n.text.chars().filter(|c| *c != '_').collect();
                if !digits.chars().all(|c| c.is_ascii_digit()) {
                    return Err(err("integer literal too large"));
                }
                Value::Int {
                    negative: false,
                    digits: digits.trim_start_matches('0').to_string(),
                }
            }
            NumberValue::Float => Value::Float(parse_float(&n.text)?),
            NumberValue::Imaginary => return Err(err("complex literal")),
        },
        K::Strings(parts) => strings(parts)?,
        K::True => Value::Bool(true),
        K::False => Value::Bool(false),
        K::None => Value::None,
        K::UnaryOp { op, operand } => {
            let v = eval(operand)?;
            match (op, v) {
                (UnaryOp::Neg, Value::Int { negative, digits }) => Value::Int {
                    negative: !negative && digits != "0",
                    digits,
                },
                (UnaryOp::Neg, Value::Float(f)) => Value::Float(-f),
                (UnaryOp::Pos, v @ (Value::Int { .. } | Value::Float(_))) => v,
                _ => return Err(err("unsupported unary operand")),
            }
        }
        K::List(items) => Value::List(items.iter().map(eval).collect::<Result<_, _>>()?),
        K::Tuple { elts, .. } => Value::Tuple(elts.iter().map(eval).collect::<Result<_, _>>()?),
        K::Set(items) => {
            let mut out: Vec<Value> = Vec::new();
            for v in items.iter().map(eval) {
                let v = v?;
                if !out.contains(&v) {
                    out.push(v);
                }
            }
            Value::Set(out)
        }
        K::Dict(items) => {
            let mut out: Vec<(Value, Value)> = Vec::new();
            for item in items {
                let DictItem::Pair(k, v) = item else { return Err(err("dict unpacking")) };
                let (k, v) = (eval(k)?, eval(v)?);
                match out.iter_mut().find(|(ek, _)| *ek == k) {
                    Some(slot) => slot.1 = v,
                    None => out.push((k, v)),
                }
            }
            Value::Dict(out)
        }
        K::Call { func, args } if args.is_empty() => match &func.kind {
            K::Name(n) if n.name == "set" => Value::Set(Vec::new()),
            K::Name(n) if n.name == "list" => Value::List(Vec::new()),
            K::Name(n) if n.name == "tuple" => Value::Tuple(Vec::new()),
            K::Name(n) if n.name == "dict" => Value::Dict(Vec::new()),
            _ => return Err(err("call")),
        },
        _ => return Err(err("unsupported expression")),
    })
}

fn parse_float(text: &str) -> Result<f64, LiteralError> {
    let mut t: String = text.chars().filter(|c| *c != '_').collect();
    if t.starts_with('.') {
        t.insert(0, '0');
    }
    if let Some(i) = t.find(['e', 'E']) {
        if t[..i].ends_with('.') {
            t.insert(i, '0');
        }
    } else if t.ends_with('.') {
        t.push('0');
    }
    t.parse().map_err(|_| err("float literal"))
}

fn strings(parts: &[StrPart]) -> Result<Value, LiteralError> {
    let mut text = String::new();
    let mut bytes: Option<Vec<u8>> = None;
    for (i, p) in parts.iter().enumerate() {
        let StrPart::Plain { raw, .. } = p else { return Err(err("f-string")) };
        let (prefix, body) = split_string(raw)?;
        let is_bytes = prefix.contains('b');
        if i > 0 && is_bytes != bytes.is_some() {
            return Err(err("mixed bytes and str"));
        }
        let decoded = decode(body, prefix.contains('r'), is_bytes)?;
        if is_bytes {
            let buf = bytes.get_or_insert_with(Vec::new);
            buf.extend(decoded.chars().map(|c| c as u32 as u8));
        } else {
            text.push_str(&decoded);
        }
    }
    Ok(match bytes {
        Some(b) => Value::Bytes(b),
        None => Value::Str(text),
    })
}

fn split_string(raw: &str) -> Result<(String, &str), LiteralError> {
    let q = raw.find(['\'', '"']).ok_or_else(|| err("string"))?;
    let prefix = raw[..q].to_ascii_lowercase();
    let rest = &raw[q..];
    let quote_len = if rest.starts_with("'''") || rest.starts_with("\"\"\"") { 3 } else { 1 };
    if rest.len() < 2 * quote_len {
        return Err(err("string"));
    }
    Ok((prefix, &rest[quote_len..rest.len() - quote_len]))
}

/// Decodes escape sequences. For bytes literals every resulting char is
/// below 256 and stands for one byte.
fn decode(body: &str, raw: bool, bytes: bool) -> Result<String, LiteralError> {
    if raw {
        return Ok(body.to_string());
    }
    let mut out = String::new();
    let mut chars = body.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        let Some(e) = chars.next() else {
            out.push('\\');
            break;
        };
        let mut hex = |n: usize| -> Result<char, LiteralError> {
            let digits: String = (0..n).filter_map(|_| chars.next()).collect();
            u32::from_str_radix(&digits, 16)
                .ok()
                .filter(|_| digits.len() == n)
                .and_then(char::from_u32)
                .ok_or_else(|| err("escape"))
        };
        match e {
            '\n' => {}
            '\\' | '\'' | '"' => out.push(e),
            'n' => out.push('\n'),
            'r' => out.push('\r'),
            't' => out.push('\t'),
            'a' => out.push('\x07'),
            'b' => out.push('\x08'),
            'f' => out.push('\x0c'),
            'v' => out.push('\x0b'),
            'x' => out.push(hex(2)?),
            'u' if !bytes => out.push(hex(4)?),
            'U' if !bytes => out.push(hex(8)?),
            '0'..='7' => {
                let mut v = e.to_digit(8).unwrap();
                for _ in 0..2 {
                    match chars.peek().and_then(|d| d.to_digit(8)) {
                        Some(d) => {
                            v = v * 8 + d;
                            chars.next();
                        }
                        None => break,
                    }
                }
                out.push(char::from_u32(v).ok_or_else(|| err("escape"))?);
            }
            'N' if !bytes => return Err(err("named unicode escape")),
            other => {
                out.push('\\');
                out.push(other);
            }
        }
    }
    Ok(out)
}

fn repr(v: &Value) -> String {
    match v {
        Value::Int { negative, digits } => {
            let digits = if digits.is_empty() { "0" } else { digits };
            if *negative {
                format!("-{digits}")
            } else {
                digits.to_string()
            }
        }
        Value::Float(f) => float_repr(*f),
        Value::Str(s) => str_repr(s),
        Value::Bytes(b) => bytes_repr(b),
        Value::Bool(true) => "True".into(),
        Value::Bool(false) => "False".into(),
        Value::None => "None".into(),
        Value::List(items) => format!("[{}]", join(items)),
        Value::Tuple(items) if items.len() == 1 => format!("({},)", repr(&items[0])),
        Value::Tuple(items) => format!("({})", join(items)),
        Value::Set(items) if items.is_empty() => "set()".into(),
        Value::Set(items) => format!("{{{}}}", join(items)),
        Value::Dict(items) => {
            let inner: Vec<String> = items.iter().map(|(k, v)| format!("{}: {}", repr(k), repr(v))).collect();
            format!("{{{}}}", inner.join(", "))
        }
    }
}

fn join(items: &[Value]) -> String {
    items.iter().map(repr).collect::<Vec<_>>().join(", ")
}

fn float_repr(f: f64) -> String {
    if f.is_nan() {
        return "nan".into();
    }
    if f.is_infinite() {
        return if f > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = f.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) {
        let s = format!("{f:?}");
        if s.contains(['.', 'e', 'E']) {
            s
        } else {
            format!("{s}.0")
        }
    } else {
        let s = format!("{f:e}");
        let (mantissa, exp) = s.split_once('e').unwrap();
        let exp: i32 = exp.parse().unwrap();
        format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn pick_quote(has_single: bool, has_double: bool) -> char {
    if has_single && !has_double {
        '"'
    } else {
        '\''
    }
}

fn str_repr(s: &str) -> String {
    let q = pick_quote(s.contains('\''), s.contains('"'));
    let mut out = String::with_capacity(s.len() + 2);
    out.push(q);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == q => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 || c as u32 == 0x7f => out.push_str(&format!("\\x{:02x}", c as u32)),
            c if c.is_control() || (c.is_whitespace() && c != ' ') => {
                let v = c as u32;
                if v <= 0xff {
                    out.push_str(&format!("\\x{v:02x}"));
                } else if v <= 0xffff {
                    out.push_str(&format!("\\u{v:04x}"));
                } else {
                    out.push_str(&format!("\\U{v:08x}"));
                }
            }
            c => out.push(c),
        }
    }
    out.push(q);
    out
}

fn bytes_repr(b: &[u8]) -> String {
    let q = pick_quote(b.contains(&b'\''), b.contains(&b'"')) as u8;
    let mut out = String::from("b");
    out.push(q as char);
    for &c in b {
        match c {
            b'\\' => out.push_str("\\\\"),
            b'\n' => out.push_str("\\n"),
            b'\r' => out.push_str("\\r"),
            b'\t' => out.push_str("\\t"),
            c if c == q => {
                out.push('\\');
                out.push(c as char);
            }
            0x20..=0x7e => out.push(c as char),
            c => out.push_str(&format!("\\x{c:02x}")),
        }
    }
    out.push(q as char);
    out
}
