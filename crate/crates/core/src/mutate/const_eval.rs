//! Evaluator for the constant boolean expressions in the CondAug pool.
//!
//! Only literals, parentheses, `not`/`and`/`or`, integer arithmetic and
//! comparisons are accepted, which makes every accepted entry free of side
//! effects by construction.

use crate::syntax::ast::*;
use crate::syntax::parse_expression;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolEntryKind {
    /// Always `True`; used as `C and (T)`.
    Tautology,
    /// Always `False`; used as `C or (F)`.
    Contradiction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Value {
    Int(i128),
    Bool(bool),
}

impl Value {
    fn truthy(self) -> bool {
        match self {
            Value::Int(i) => i != 0,
            Value::Bool(b) => b,
        }
    }

    fn as_int(self) -> i128 {
        match self {
            Value::Int(i) => i,
            Value::Bool(b) => b as i128,
        }
    }
}

/// Classifies a pool entry, rejecting anything that is not a constant
/// boolean expression.
pub fn classify_pool_entry(text: &str) -> Result<PoolEntryKind, String> {
    let expr = parse_expression(text).map_err(|e| e.to_string())?;
    match eval(&expr)? {
        Value::Bool(true) => Ok(PoolEntryKind::Tautology),
        Value::Bool(false) => Ok(PoolEntryKind::Contradiction),
        Value::Int(_) => Err("expression does not evaluate to a bool".into()),
    }
}

fn eval(e: &Expr) -> Result<Value, String> {
    use ExprKind as K;
    match &e.kind {
        K::True => Ok(Value::Bool(true)),
        K::False => Ok(Value::Bool(false)),
        K::Number(n) => match n.value {
            NumberValue::Int(Some(v)) if v <= i64::MAX as u128 => Ok(Value::Int(v as i128)),
            _ => Err(format!("unsupported literal `{}`", n.text)),
        },
        K::Paren(inner) => eval(inner),
        K::UnaryOp { op, operand } => {
            let v = eval(operand)?;
            Ok(match op {
                UnaryOp::Not => Value::Bool(!v.truthy()),
                UnaryOp::Neg => Value::Int(-v.as_int()),
                UnaryOp::Pos => Value::Int(v.as_int()),
                UnaryOp::Invert => Value::Int(!v.as_int()),
            })
        }
        K::BoolOp { op, values } => {
            let mut last = Value::Bool(matches!(op, BoolOpKind::And));
            for v in values {
                last = eval(v)?;
                let stop = match op {
                    BoolOpKind::And => !last.truthy(),
                    BoolOpKind::Or => last.truthy(),
                };
                if stop {
                    break;
                }
            }
            Ok(last)
        }
        K::BinOp { left, op, right } => {
            let a = eval(left)?.as_int();
            let b = eval(right)?.as_int();
            let r = match op {
                BinOp::Add => a.checked_add(b),
                BinOp::Sub => a.checked_sub(b),
                BinOp::Mult => a.checked_mul(b),
                BinOp::FloorDiv if b != 0 => Some(py_floordiv(a, b)),
                BinOp::Mod if b != 0 => Some(a - b * py_floordiv(a, b)),
                _ => None,
            };
            r.map(Value::Int).ok_or_else(|| format!("unsupported arithmetic `{}`", op.symbol()))
        }
        K::Compare {
            left,
            ops,
            comparators,
        } => {
            let mut a = eval(left)?;
            for (op, c) in ops.iter().zip(comparators) {
                let b = eval(c)?;
                let (x, y) = (a.as_int(), b.as_int());
                let holds = match op {
                    CmpOp::Eq => x == y,
                    CmpOp::NotEq => x != y,
                    CmpOp::Lt => x < y,
                    CmpOp::LtE => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::GtE => x >= y,
                    _ => return Err(format!("unsupported comparison `{}`", op.symbol())),
                };
                if !holds {
                    return Ok(Value::Bool(false));
                }
                a = b;
            }
            Ok(Value::Bool(true))
        }
        _ => Err("only literals, arithmetic, comparisons and boolean operators are allowed".into()),
    }
}

fn py_floordiv(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifies_the_default_pool() {
        for entry in super::super::DEFAULT_TAUTOLOGY_POOL {
            assert!(classify_pool_entry(entry).is_ok(), "{entry}");
        }
        assert_eq!(classify_pool_entry("(8 > 6) or (8 < 6)"), Ok(PoolEntryKind::Tautology));
        assert_eq!(classify_pool_entry("False and True"), Ok(PoolEntryKind::Contradiction));
        assert_eq!(classify_pool_entry("1 < 2 < 3"), Ok(PoolEntryKind::Tautology));
        assert_eq!(classify_pool_entry("7 // -2 == -4"), Ok(PoolEntryKind::Tautology));
        assert_eq!(classify_pool_entry("-7 % 3 == 2"), Ok(PoolEntryKind::Tautology));
    }

    #[test]
    fn rejects_impure_or_non_boolean_entries() {
        assert!(classify_pool_entry("print(1) or True").is_err());
        assert!(classify_pool_entry("x > 1").is_err());
        assert!(classify_pool_entry("1 + 1").is_err());
        assert!(classify_pool_entry("1 / 0 == 1").is_err());
        assert!(classify_pool_entry("(8 > 6").is_err());
    }
}
