//! Generic pre-order traversal helpers.

use super::ast::*;

/// Direct sub-expressions of `e`, in source order.
pub fn expr_children(e: &Expr) -> Vec<&Expr> {
    use ExprKind as K;
    let mut out: Vec<&Expr> = Vec::new();
    match &e.kind {
        K::Name(_) | K::Number(_) | K::True | K::False | K::None | K::Ellipsis => {}
        K::Strings(parts) => {
            for p in parts {
                if let StrPart::FString(f) = p {
                    fpiece_exprs(&f.pieces, &mut out);
                }
            }
        }
        K::BoolOp { values, .. } => out.extend(values),
        K::NamedExpr { value, .. } => out.push(value),
        K::BinOp { left, right, .. } => {
            out.push(left);
            out.push(right);
        }
        K::UnaryOp { operand, .. } => out.push(operand),
        K::Lambda { params, body } => {
            params_exprs(params, &mut out);
            out.push(body);
        }
        K::IfExp { test, body, orelse } => {
            out.push(body);
            out.push(test);
            out.push(orelse);
        }
        K::Dict(items) => {
            for it in items {
                match it {
                    DictItem::Pair(k, v) => {
                        out.push(k);
                        out.push(v);
                    }
                    DictItem::Unpack(v) => out.push(v),
                }
            }
        }
        K::Set(elts) | K::List(elts) | K::Tuple { elts, .. } => out.extend(elts),
        K::ListComp { elt, generators }
        | K::SetComp { elt, generators }
        | K::GeneratorExp { elt, generators, .. } => {
            out.push(elt);
            comp_exprs(generators, &mut out);
        }
        K::DictComp {
            key,
            value,
            generators,
        } => {
            out.push(key);
            out.push(value);
            comp_exprs(generators, &mut out);
        }
        K::Await(v) | K::YieldFrom(v) | K::Starred(v) | K::DoubleStarred(v) | K::Paren(v) => {
            out.push(v)
        }
        K::Yield(v) => {
            if let Some(v) = v {
                out.push(v);
            }
        }
        K::Compare {
            left, comparators, ..
        } => {
            out.push(left);
            out.extend(comparators);
        }
        K::Call { func, args } => {
            out.push(func);
            args_exprs(args, &mut out);
        }
        K::Attribute { value, .. } => out.push(value),
        K::Subscript { value, slice } => {
            out.push(value);
            out.push(slice);
        }
        K::Slice { lower, upper, step } => {
            for part in [lower, upper, step].into_iter().flatten() {
                out.push(part);
            }
        }
    }
    out
}

fn fpiece_exprs<'a>(pieces: &'a [FPiece], out: &mut Vec<&'a Expr>) {
    for p in pieces {
        if let FPiece::Field(f) = p {
            out.push(&f.expr);
            if let Some(spec) = &f.format_spec {
                fpiece_exprs(spec, out);
            }
        }
    }
}

fn comp_exprs<'a>(gens: &'a [Comprehension], out: &mut Vec<&'a Expr>) {
    for g in gens {
        out.push(&g.target);
        out.push(&g.iter);
        out.extend(&g.ifs);
    }
}

fn params_exprs<'a>(params: &'a Params, out: &mut Vec<&'a Expr>) {
    for p in params.params() {
        if let Some(a) = &p.annotation {
            out.push(a);
        }
        if let Some(d) = &p.default {
            out.push(d);
        }
    }
}

fn args_exprs<'a>(args: &'a [Arg], out: &mut Vec<&'a Expr>) {
    for a in args {
        match a {
            Arg::Positional(e) | Arg::Starred(e) | Arg::DoubleStarred(e) => out.push(e),
            Arg::Keyword { value, .. } => out.push(value),
        }
    }
}

/// Calls `f` on `e` and every expression nested inside it, pre-order.
pub fn walk_expr<'a>(e: &'a Expr, f: &mut impl FnMut(&'a Expr)) {
    f(e);
    for c in expr_children(e) {
        walk_expr(c, f);
    }
}

/// Expressions owned directly by `stmt` (not by statements nested in it).
pub fn stmt_exprs(stmt: &Stmt) -> Vec<&Expr> {
    use StmtKind as S;
    let mut out: Vec<&Expr> = Vec::new();
    match &stmt.kind {
        S::FunctionDef(f) => {
            out.extend(&f.decorators);
            params_exprs(&f.params, &mut out);
            if let Some(r) = &f.returns {
                out.push(r);
            }
        }
        S::ClassDef(c) => {
            out.extend(&c.decorators);
            args_exprs(&c.bases, &mut out);
        }
        S::Return(v) => out.extend(v),
        S::Delete(t) => out.extend(t),
        S::Assign { targets, value } => {
            out.extend(targets);
            out.push(value);
        }
        S::AugAssign { target, value, .. } => {
            out.push(target);
            out.push(value);
        }
        S::AnnAssign {
            target,
            annotation,
            value,
        } => {
            out.push(target);
            out.push(annotation);
            out.extend(value);
        }
        S::For(f) => {
            out.push(&f.target);
            out.push(&f.iter);
        }
        S::While { test, .. } => out.push(test),
        S::If { branches, .. } => out.extend(branches.iter().map(|b| &b.test)),
        S::With { items, .. } => {
            for it in items {
                out.push(&it.context);
                out.extend(&it.target);
            }
        }
        S::Match { subject, cases } => {
            out.push(subject);
            out.extend(cases.iter().filter_map(|c| c.guard.as_ref()));
        }
        S::Raise { exc, cause } => {
            out.extend(exc);
            out.extend(cause);
        }
        S::Try { handlers, .. } => out.extend(handlers.iter().filter_map(|h| h.typ.as_ref())),
        S::Assert { test, msg } => {
            out.push(test);
            out.extend(msg);
        }
        S::Expr(e) => out.push(e),
        S::Import(_)
        | S::ImportFrom { .. }
        | S::Global(_)
        | S::Nonlocal(_)
        | S::Pass
        | S::Break
        | S::Continue => {}
    }
    out
}

/// Statement bodies nested directly inside `stmt`.
pub fn stmt_bodies(stmt: &Stmt) -> Vec<&[Stmt]> {
    use StmtKind as S;
    match &stmt.kind {
        S::FunctionDef(f) => vec![&f.body],
        S::ClassDef(c) => vec![&c.body],
        S::For(f) => vec![&f.body, &f.orelse],
        S::While { body, orelse, .. } => vec![body, orelse],
        S::If { branches, orelse } => {
            let mut v: Vec<&[Stmt]> = branches.iter().map(|b| b.body.as_slice()).collect();
            v.push(orelse);
            v
        }
        S::With { body, .. } => vec![body],
        S::Match { cases, .. } => cases.iter().map(|c| c.body.as_slice()).collect(),
        S::Try {
            body,
            handlers,
            orelse,
            finalbody,
        } => {
            let mut v: Vec<&[Stmt]> = vec![body];
            v.extend(handlers.iter().map(|h| h.body.as_slice()));
            v.push(orelse);
            v.push(finalbody);
            v
        }
        _ => Vec::new(),
    }
}

/// Calls `f` on every statement in `body`, recursively, pre-order.
pub fn walk_stmts<'a>(body: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in body {
        f(s);
        for b in stmt_bodies(s) {
            walk_stmts(b, f);
        }
    }
}
