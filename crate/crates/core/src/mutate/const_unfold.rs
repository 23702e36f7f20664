//! ConstUnfold: replaces a non-negative integer literal `n` with
//! `a - k` (where `a = n + k`) or `a + k` (where `a = n - k`).
//!
//! Parentheses are added only where the surrounding expression binds
//! tighter than binary `-`, so `lists[i] = 5` becomes `lists[i] = 7 - 2`
//! while `x * 5` becomes `x * (7 - 2)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::regions::function_statements;
use super::{EditList, MutateError, MutationConfig, MutationKind, Skip};
use crate::syntax::ast::*;
use crate::syntax::Span;

pub fn unfold(
    text: &str,
    tree: &Module,
    config: &MutationConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(EditList, Vec<Skip>), MutateError> {
    let (lo, hi) = config.unfold_offset_range;
    if lo == 0 || lo > hi {
        return Err(MutateError::Config(format!(
            "unfold_offset_range must be a non-empty interval of positive integers (got [{lo}, {hi}])"
        )));
    }
    let mut u = Unfolder {
        text,
        lo,
        hi,
        rng,
        edits: EditList::new(),
        skipped: Vec::new(),
    };
    for stmt in function_statements(tree) {
        u.stmt(stmt);
    }
    u.edits.sort_by_key(|(s, _)| s.start);
    Ok((u.edits, u.skipped))
}

/// How a literal's replacement must be written in its position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Bare,
    Parenthesized,
    Skip(&'static str),
}

struct Unfolder<'a, 'r> {
    text: &'a str,
    lo: u32,
    hi: u32,
    rng: &'r mut ChaCha8Rng,
    edits: EditList,
    skipped: Vec<Skip>,
}

impl Unfolder<'_, '_> {
    fn skip(&mut self, span: Span, reason: &str) {
        self.skipped.push(Skip {
            span,
            reason: reason.to_string(),
            op: MutationKind::ConstUnfold,
        });
    }

    fn stmt(&mut self, stmt: &Stmt) {
        use StmtKind as S;
        match &stmt.kind {
            // Signatures of nested definitions are left alone.
            S::FunctionDef(_) | S::ClassDef(_) => {}
            S::AnnAssign { target, value, .. } => {
                self.expr(target, Slot::Bare);
                if let Some(v) = value {
                    self.expr(v, Slot::Bare);
                }
            }
            S::Match { subject, cases } => {
                self.expr(subject, Slot::Bare);
                for c in cases {
                    self.pattern_skips(&c.pattern);
                    if let Some(g) = &c.guard {
                        self.expr(g, Slot::Bare);
                    }
                }
            }
            _ => {
                for e in crate::syntax::visit::stmt_exprs(stmt) {
                    self.expr(e, Slot::Bare);
                }
            }
        }
    }

    fn pattern_skips(&mut self, p: &Pattern) {
        let mut spans = Vec::new();
        collect_pattern_literals(p, &mut spans);
        for s in spans {
            self.skip(s, "match-pattern");
        }
    }

    fn literal(&mut self, e: &Expr, n: &Number, slot: Slot) {
        let value = match n.value {
            NumberValue::Int(Some(v)) => v,
            NumberValue::Int(None) => return self.skip(e.span, "literal-too-large"),
            NumberValue::Float | NumberValue::Imaginary => return,
        };
        let paren = match slot {
            Slot::Skip(reason) => return self.skip(e.span, reason),
            Slot::Bare => false,
            Slot::Parenthesized => true,
        };
        let k = self.rng.random_range(self.lo..=self.hi) as u128;
        let prefer_minus = self.rng.random_bool(0.5);
        let body = match (value.checked_add(k), value >= k) {
            (_, true) if prefer_minus => format!("{} + {}", value - k, k),
            (Some(a), _) => format!("{} - {}", a, k),
            (None, true) => format!("{} + {}", value - k, k),
            (None, false) => return self.skip(e.span, "literal-too-large"),
        };
        let mut new = if paren { format!("({body})") } else { body };
        if !paren {
            let before = self.text[..e.span.start].chars().next_back();
            let after = self.text[e.span.end..].chars().next();
            if before.is_some_and(is_word_char) {
                new.insert(0, ' ');
            }
            if after.is_some_and(is_word_char) {
                new.push(' ');
            }
        }
        self.edits.push((e.span, new));
    }

    fn expr(&mut self, e: &Expr, slot: Slot) {
        use ExprKind as K;
        let inherited_skip = match slot {
            Slot::Skip(r) => Some(r),
            _ => None,
        };
        // Children of a skipped region stay skipped.
        let child = |s: Slot| inherited_skip.map(Slot::Skip).unwrap_or(s);
        match &e.kind {
            K::Number(n) => self.literal(e, n, slot),
            K::BinOp { left, op, right } => {
                let s = if op.is_arithmetic() { Slot::Parenthesized } else { Slot::Bare };
                self.expr(left, child(s));
                self.expr(right, child(s));
            }
            K::UnaryOp { op, operand } => {
                let s = if *op == UnaryOp::Not { Slot::Bare } else { Slot::Parenthesized };
                self.expr(operand, child(s));
            }
            K::Attribute { value, .. } => self.expr(value, child(Slot::Parenthesized)),
            K::Subscript { value, slice } => {
                self.expr(value, child(Slot::Parenthesized));
                self.expr(slice, child(Slot::Bare));
            }
            K::Call { func, args } => {
                self.expr(func, child(Slot::Parenthesized));
                for a in args {
                    match a {
                        Arg::Positional(v) | Arg::Starred(v) | Arg::DoubleStarred(v) => self.expr(v, child(Slot::Bare)),
                        Arg::Keyword { value, .. } => self.expr(value, child(Slot::Bare)),
                    }
                }
            }
            K::Await(v) => self.expr(v, child(Slot::Parenthesized)),
            K::Compare {
                left,
                ops,
                comparators,
            } => {
                let is_identity = |op: Option<&CmpOp>| matches!(op, Some(CmpOp::Is) | Some(CmpOp::IsNot));
                let left_slot = if is_identity(ops.first()) { Slot::Skip("is-operand") } else { Slot::Bare };
                self.expr(left, child(left_slot));
                for (i, c) in comparators.iter().enumerate() {
                    let s = if is_identity(ops.get(i)) || is_identity(ops.get(i + 1)) {
                        Slot::Skip("is-operand")
                    } else {
                        Slot::Bare
                    };
                    self.expr(c, child(s));
                }
            }
            K::Lambda { body, .. } => self.expr(body, child(Slot::Bare)),
            K::Strings(_) => {
                let mut spans = Vec::new();
                crate::syntax::visit::walk_expr(e, &mut |x| {
                    if let K::Number(Number {
                        value: NumberValue::Int(_),
                        ..
                    }) = &x.kind
                    {
                        spans.push(x.span);
                    }
                });
                for s in spans {
                    self.skip(s, "fstring");
                }
            }
            _ => {
                for c in crate::syntax::visit::expr_children(e) {
                    self.expr(c, child(Slot::Bare));
                }
            }
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn collect_pattern_literals(p: &Pattern, out: &mut Vec<Span>) {
    match &p.kind {
        PatternKind::Value(e) => crate::syntax::visit::walk_expr(e, &mut |x| {
            if matches!(x.kind, ExprKind::Number(_)) {
                out.push(x.span);
            }
        }),
        PatternKind::Sequence { items, .. } | PatternKind::Or(items) => {
            for it in items {
                collect_pattern_literals(it, out);
            }
        }
        PatternKind::Mapping { items, .. } => {
            for (k, v) in items {
                if matches!(k.kind, ExprKind::Number(_)) {
                    out.push(k.span);
                }
                collect_pattern_literals(v, out);
            }
        }
        PatternKind::Class { args, kwargs, .. } => {
            for a in args {
                collect_pattern_literals(a, out);
            }
            for (_, v) in kwargs {
                collect_pattern_literals(v, out);
            }
        }
        PatternKind::As { pattern, .. } | PatternKind::Group(pattern) => collect_pattern_literals(pattern, out),
        PatternKind::Capture(_) | PatternKind::Wildcard | PatternKind::Star(_) => {}
    }
}
