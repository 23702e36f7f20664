//! CondAug: `if C:` becomes `if C and (T):` for a tautology `T`, or
//! `if C or (F):` for a contradiction `F`. Both preserve the truth value of
//! `C`, and `C` is still evaluated exactly once.
//!
//! `C` is kept verbatim; it is wrapped in parentheses only when its
//! top-level operator binds more loosely than the added `and`/`or`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::regions::function_statements;
use super::{EditList, MutateError, MutationConfig, PoolEntryKind, Skip};
use crate::syntax::ast::*;

pub fn augment(
    text: &str,
    tree: &Module,
    config: &MutationConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(EditList, Vec<Skip>), MutateError> {
    let pool = config.classified_pool()?;
    let mut edits = EditList::new();
    for stmt in function_statements(tree) {
        let StmtKind::If { branches, .. } = &stmt.kind else { continue };
        for b in branches {
            let (entry, kind) = &pool[rng.random_range(0..pool.len())];
            edits.push((b.test.span, augmented(text, &b.test, entry, *kind)));
        }
    }
    edits.sort_by_key(|(s, _)| s.start);
    Ok((edits, Vec::new()))
}

fn augmented(text: &str, test: &Expr, entry: &str, kind: PoolEntryKind) -> String {
    let c = &text[test.span.range()];
    let needs_paren = match &test.kind {
        ExprKind::IfExp { .. } | ExprKind::Lambda { .. } | ExprKind::NamedExpr { .. } => true,
        ExprKind::BoolOp { op: BoolOpKind::Or, .. } => kind == PoolEntryKind::Tautology,
        _ => false,
    };
    let c = if needs_paren { format!("({c})") } else { c.to_string() };
    match kind {
        PoolEntryKind::Tautology => format!("{c} and ({entry})"),
        PoolEntryKind::Contradiction => format!("{c} or ({entry})"),
    }
}
