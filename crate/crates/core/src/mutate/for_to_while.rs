//! For2While: rewrites `for target in iterable:` as an explicit
//! iterator-protocol loop that advances at the top of each iteration:
//!
//! ```text
//! _mb_it1 = iter(iterable)
//! _mb_sn1 = object()
//! while True:
//!     _mb_nx1 = next(_mb_it1, _mb_sn1)
//!     if _mb_nx1 is _mb_sn1: break
//!     target = _mb_nx1
//!     <original body>
//! ```
//!
//! Because the advance happens before the body, `continue` moves to the
//! next element and `break` leaves the loop, exactly as in the original.

use super::regions::{statements, Region};
use super::{EditList, MutationKind, Skip};
use crate::syntax::analyze_scopes;
use crate::syntax::ast::*;
use crate::syntax::Span;

/// Builtins the template relies on.
const TEMPLATE_BUILTINS: [&str; 3] = ["iter", "next", "object"];

pub fn convert(text: &str, tree: &Module) -> (EditList, Vec<Skip>) {
    let mut edits = EditList::new();
    let mut skipped = Vec::new();
    let mut skip = |span: Span, reason: &str| {
        skipped.push(Skip {
            span,
            reason: reason.to_string(),
            op: MutationKind::For2While,
        })
    };

    let loops: Vec<(&Stmt, &For, Region)> = statements(tree)
        .into_iter()
        .filter_map(|(s, r)| match &s.kind {
            StmtKind::For(f) => Some((s, f.as_ref(), r)),
            _ => None,
        })
        .collect();
    if loops.is_empty() {
        return (edits, skipped);
    }

    let table = analyze_scopes(tree);
    let shadowed = TEMPLATE_BUILTINS.iter().any(|b| table.bound_names.contains(*b));
    let mut counter = 0usize;
    for (stmt, f, region) in loops {
        if region != Region::Function {
            skip(f.header, if region == Region::Class { "class-body" } else { "outside-function" });
            continue;
        }
        if f.is_async {
            skip(f.header, "async-for");
            continue;
        }
        if !f.orelse.is_empty() {
            skip(f.header, "for-else");
            continue;
        }
        if shadowed {
            skip(f.header, "shadowed-builtin");
            continue;
        }
        if table.dynamic_access.is_some() {
            skip(f.header, "dynamic-name-access");
            continue;
        }
        let Some(first) = f.body.first() else { continue };
        let line_start = text[..stmt.span.start].rfind('\n').map_or(0, |i| i + 1);
        let ind = &text[line_start..stmt.span.start];
        if !ind.chars().all(|c| c == ' ' || c == '\t') {
            skip(f.header, "unsupported-layout");
            continue;
        }
        let inline_body = !text[f.header.end..first.span.start].contains('\n');
        let bind = if inline_body {
            format!("{ind}{}", if ind.contains('\t') { "\t" } else { "    " })
        } else {
            let body_line = text[..first.span.start].rfind('\n').map_or(0, |i| i + 1);
            text[body_line..first.span.start].to_string()
        };

        let n = loop {
            counter += 1;
            let clash = ["_mb_it", "_mb_sn", "_mb_nx"]
                .iter()
                .any(|p| table.identifiers.contains(&format!("{p}{counter}")));
            if !clash {
                break counter;
            }
        };
        let iter_text = &text[f.iter.span.range()];
        let iter_text = match &f.iter.kind {
            ExprKind::Tuple { parenthesized: false, .. } => format!("({iter_text})"),
            _ => iter_text.to_string(),
        };
        let target_text = &text[f.target.span.range()];
        let new = format!(
            "_mb_it{n} = iter({iter_text})\n\
             {ind}_mb_sn{n} = object()\n\
             {ind}while True:\n\
             {bind}_mb_nx{n} = next(_mb_it{n}, _mb_sn{n})\n\
             {bind}if _mb_nx{n} is _mb_sn{n}: break\n\
             {bind}{target_text} = _mb_nx{n}\n\
             {bind}"
        );
        edits.push((Span::new(stmt.span.start, first.span.start), new));
    }
    (edits, skipped)
}
