//! Canonical source rendering: 4-space indentation, one statement per line,
//! single spaces around binary operators, comments dropped.
//!
//! Explicit parentheses are kept as [`ExprKind::Paren`] nodes, so rendering
//! never needs to invent grouping to stay faithful to the parsed tree.

use super::ast::*;

pub fn render(module: &Module) -> String {
    let mut out = String::new();
    for stmt in &module.body {
        stmt_into(&mut out, stmt, 0);
    }
    out
}

pub fn render_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr_into(&mut s, e);
    s
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn block(out: &mut String, body: &[Stmt], level: usize) {
    if body.is_empty() {
        indent(out, level);
        out.push_str("pass\n");
    }
    for s in body {
        stmt_into(out, s, level);
    }
}

fn stmt_into(out: &mut String, stmt: &Stmt, level: usize) {
    use StmtKind as S;
    match &stmt.kind {
        S::FunctionDef(f) => {
            for d in &f.decorators {
                indent(out, level);
                out.push('@');
                expr_into(out, d);
                out.push('\n');
            }
            indent(out, level);
            if f.is_async {
                out.push_str("async ");
            }
            out.push_str("def ");
            out.push_str(&f.name.name);
            out.push('(');
            params_into(out, &f.params);
            out.push(')');
            if let Some(r) = &f.returns {
                out.push_str(" -> ");
                expr_into(out, r);
            }
            out.push_str(":\n");
            block(out, &f.body, level + 1);
        }
        S::ClassDef(c) => {
            for d in &c.decorators {
                indent(out, level);
                out.push('@');
                expr_into(out, d);
                out.push('\n');
            }
            indent(out, level);
            out.push_str("class ");
            out.push_str(&c.name.name);
            if !c.bases.is_empty() {
                out.push('(');
                args_into(out, &c.bases);
                out.push(')');
            }
            out.push_str(":\n");
            block(out, &c.body, level + 1);
        }
        S::For(f) => {
            indent(out, level);
            if f.is_async {
                out.push_str("async ");
            }
            out.push_str("for ");
            expr_into(out, &f.target);
            out.push_str(" in ");
            expr_into(out, &f.iter);
            out.push_str(":\n");
            block(out, &f.body, level + 1);
            else_into(out, &f.orelse, level);
        }
        S::While { test, body, orelse } => {
            indent(out, level);
            out.push_str("while ");
            expr_into(out, test);
            out.push_str(":\n");
            block(out, body, level + 1);
            else_into(out, orelse, level);
        }
        S::If { branches, orelse } => {
            for (i, b) in branches.iter().enumerate() {
                indent(out, level);
                out.push_str(if i == 0 { "if " } else { "elif " });
                expr_into(out, &b.test);
                out.push_str(":\n");
                block(out, &b.body, level + 1);
            }
            else_into(out, orelse, level);
        }
        S::With { items, body, is_async } => {
            indent(out, level);
            if *is_async {
                out.push_str("async ");
            }
            out.push_str("with ");
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr_into(out, &it.context);
                if let Some(t) = &it.target {
                    out.push_str(" as ");
                    expr_into(out, t);
                }
            }
            out.push_str(":\n");
            block(out, body, level + 1);
        }
        S::Match { subject, cases } => {
            indent(out, level);
            out.push_str("match ");
            expr_into(out, subject);
            out.push_str(":\n");
            for c in cases {
                indent(out, level + 1);
                out.push_str("case ");
                pattern_into(out, &c.pattern);
                if let Some(g) = &c.guard {
                    out.push_str(" if ");
                    expr_into(out, g);
                }
                out.push_str(":\n");
                block(out, &c.body, level + 2);
            }
        }
        S::Try {
            body,
            handlers,
            orelse,
            finalbody,
        } => {
            indent(out, level);
            out.push_str("try:\n");
            block(out, body, level + 1);
            for h in handlers {
                indent(out, level);
                out.push_str("except");
                if h.star {
                    out.push('*');
                }
                if let Some(t) = &h.typ {
                    out.push(' ');
                    expr_into(out, t);
                    if let Some(n) = &h.name {
                        out.push_str(" as ");
                        out.push_str(&n.name);
                    }
                }
                out.push_str(":\n");
                block(out, &h.body, level + 1);
            }
            else_into(out, orelse, level);
            if !finalbody.is_empty() {
                indent(out, level);
                out.push_str("finally:\n");
                block(out, finalbody, level + 1);
            }
        }
        _ => {
            indent(out, level);
            simple_into(out, stmt);
            out.push('\n');
        }
    }
}

fn else_into(out: &mut String, orelse: &[Stmt], level: usize) {
    if !orelse.is_empty() {
        indent(out, level);
        out.push_str("else:\n");
        block(out, orelse, level + 1);
    }
}

fn comma_list(out: &mut String, items: &[Expr]) {
    for (i, e) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr_into(out, e);
    }
}

fn simple_into(out: &mut String, stmt: &Stmt) {
    use StmtKind as S;
    match &stmt.kind {
        S::Return(v) => {
            out.push_str("return");
            if let Some(v) = v {
                out.push(' ');
                expr_into(out, v);
            }
        }
        S::Delete(targets) => {
            out.push_str("del ");
            comma_list(out, targets);
        }
        S::Assign { targets, value } => {
            for t in targets {
                expr_into(out, t);
                out.push_str(" = ");
            }
            expr_into(out, value);
        }
        S::AugAssign { target, op, value } => {
            expr_into(out, target);
            out.push(' ');
            out.push_str(op.symbol());
            out.push_str("= ");
            expr_into(out, value);
        }
        S::AnnAssign {
            target,
            annotation,
            value,
        } => {
            expr_into(out, target);
            out.push_str(": ");
            expr_into(out, annotation);
            if let Some(v) = value {
                out.push_str(" = ");
                expr_into(out, v);
            }
        }
        S::Raise { exc, cause } => {
            out.push_str("raise");
            if let Some(e) = exc {
                out.push(' ');
                expr_into(out, e);
            }
            if let Some(c) = cause {
                out.push_str(" from ");
                expr_into(out, c);
            }
        }
        S::Assert { test, msg } => {
            out.push_str("assert ");
            expr_into(out, test);
            if let Some(m) = msg {
                out.push_str(", ");
                expr_into(out, m);
            }
        }
        S::Import(names) => {
            out.push_str("import ");
            aliases_into(out, names);
        }
        S::ImportFrom { module, level, names } => {
            out.push_str("from ");
            for _ in 0..*level {
                out.push('.');
            }
            if let Some(m) = module {
                out.push_str(m);
            }
            out.push_str(" import ");
            aliases_into(out, names);
        }
        S::Global(names) | S::Nonlocal(names) => {
            out.push_str(if matches!(stmt.kind, S::Global(_)) {
                "global "
            } else {
                "nonlocal "
            });
            let joined: Vec<&str> = names.iter().map(|n| n.name.as_str()).collect();
            out.push_str(&joined.join(", "));
        }
        S::Expr(e) => expr_into(out, e),
        S::Pass => out.push_str("pass"),
        S::Break => out.push_str("break"),
        S::Continue => out.push_str("continue"),
        _ => unreachable!("compound statement rendered as simple"),
    }
}

fn aliases_into(out: &mut String, names: &[Alias]) {
    for (i, a) in names.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&a.name);
        if let Some(asn) = &a.asname {
            out.push_str(" as ");
            out.push_str(&asn.name);
        }
    }
}

fn params_into(out: &mut String, params: &Params) {
    for (i, item) in params.items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match item {
            ParamItem::PosOnlyMarker => out.push('/'),
            ParamItem::KwOnlyMarker => out.push('*'),
            ParamItem::Param(p) => {
                match p.kind {
                    ParamKind::VarArgs => out.push('*'),
                    ParamKind::KwArgs => out.push_str("**"),
                    ParamKind::Normal => {}
                }
                out.push_str(&p.name.name);
                if let Some(a) = &p.annotation {
                    out.push_str(": ");
                    expr_into(out, a);
                }
                if let Some(d) = &p.default {
                    out.push_str(if p.annotation.is_some() { " = " } else { "=" });
                    expr_into(out, d);
                }
            }
        }
    }
}

fn args_into(out: &mut String, args: &[Arg]) {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match a {
            Arg::Positional(e) => expr_into(out, e),
            Arg::Starred(e) => {
                out.push('*');
                expr_into(out, e);
            }
            Arg::DoubleStarred(e) => {
                out.push_str("**");
                expr_into(out, e);
            }
            Arg::Keyword { name, value } => {
                out.push_str(&name.name);
                out.push('=');
                expr_into(out, value);
            }
        }
    }
}

fn comps_into(out: &mut String, gens: &[Comprehension]) {
    for g in gens {
        out.push_str(if g.is_async { " async for " } else { " for " });
        expr_into(out, &g.target);
        out.push_str(" in ");
        expr_into(out, &g.iter);
        for cond in &g.ifs {
            out.push_str(" if ");
            expr_into(out, cond);
        }
    }
}

fn pieces_into(out: &mut String, pieces: &[FPiece]) {
    for p in pieces {
        match p {
            FPiece::Literal(s) => out.push_str(s),
            FPiece::Field(f) => {
                out.push('{');
                if let Some(dbg) = &f.debug_text {
                    out.push_str(dbg);
                } else {
                    let text = render_expr(&f.expr);
                    if text.starts_with('{') {
                        out.push(' ');
                    }
                    out.push_str(&text);
                    if text.ends_with('}') {
                        out.push(' ');
                    }
                }
                if let Some(c) = f.conversion {
                    out.push('!');
                    out.push(c);
                }
                if let Some(spec) = &f.format_spec {
                    out.push(':');
                    pieces_into(out, spec);
                }
                out.push('}');
            }
        }
    }
}

fn expr_into(out: &mut String, e: &Expr) {
    use ExprKind as K;
    match &e.kind {
        K::Name(id) => out.push_str(&id.name),
        K::Number(n) => out.push_str(&n.text),
        K::Strings(parts) => {
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                match p {
                    StrPart::Plain { raw, .. } => out.push_str(raw),
                    StrPart::FString(f) => {
                        out.push_str(&f.prefix);
                        out.push_str(&f.quote);
                        pieces_into(out, &f.pieces);
                        out.push_str(&f.quote);
                    }
                }
            }
        }
        K::True => out.push_str("True"),
        K::False => out.push_str("False"),
        K::None => out.push_str("None"),
        K::Ellipsis => out.push_str("..."),
        K::BoolOp { op, values } => {
            let sep = match op {
                BoolOpKind::And => " and ",
                BoolOpKind::Or => " or ",
            };
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                expr_into(out, v);
            }
        }
        K::NamedExpr { target, value } => {
            out.push_str(&target.name);
            out.push_str(" := ");
            expr_into(out, value);
        }
        K::BinOp { left, op, right } => {
            expr_into(out, left);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            expr_into(out, right);
        }
        K::UnaryOp { op, operand } => {
            out.push_str(op.symbol());
            if *op == UnaryOp::Not {
                out.push(' ');
            }
            expr_into(out, operand);
        }
        K::Lambda { params, body } => {
            out.push_str("lambda");
            if !params.items.is_empty() {
                out.push(' ');
                params_into(out, params);
            }
            out.push_str(": ");
            expr_into(out, body);
        }
        K::IfExp { test, body, orelse } => {
            expr_into(out, body);
            out.push_str(" if ");
            expr_into(out, test);
            out.push_str(" else ");
            expr_into(out, orelse);
        }
        K::Dict(items) => {
            out.push('{');
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                match it {
                    DictItem::Pair(k, v) => {
                        expr_into(out, k);
                        out.push_str(": ");
                        expr_into(out, v);
                    }
                    DictItem::Unpack(e) => {
                        out.push_str("**");
                        expr_into(out, e);
                    }
                }
            }
            out.push('}');
        }
        K::Set(elts) => {
            out.push('{');
            comma_list(out, elts);
            out.push('}');
        }
        K::List(elts) => {
            out.push('[');
            comma_list(out, elts);
            out.push(']');
        }
        K::Tuple { elts, parenthesized } => {
            if *parenthesized {
                out.push('(');
            }
            comma_list(out, elts);
            if elts.len() == 1 {
                out.push(',');
            }
            if *parenthesized {
                out.push(')');
            }
        }
        K::ListComp { elt, generators } => {
            out.push('[');
            expr_into(out, elt);
            comps_into(out, generators);
            out.push(']');
        }
        K::SetComp { elt, generators } => {
            out.push('{');
            expr_into(out, elt);
            comps_into(out, generators);
            out.push('}');
        }
        K::DictComp { key, value, generators } => {
            out.push('{');
            expr_into(out, key);
            out.push_str(": ");
            expr_into(out, value);
            comps_into(out, generators);
            out.push('}');
        }
        K::GeneratorExp { elt, generators, bare } => {
            if !bare {
                out.push('(');
            }
            expr_into(out, elt);
            comps_into(out, generators);
            if !bare {
                out.push(')');
            }
        }
        K::Await(v) => {
            out.push_str("await ");
            expr_into(out, v);
        }
        K::Yield(v) => {
            out.push_str("yield");
            if let Some(v) = v {
                out.push(' ');
                expr_into(out, v);
            }
        }
        K::YieldFrom(v) => {
            out.push_str("yield from ");
            expr_into(out, v);
        }
        K::Compare {
            left,
            ops,
            comparators,
        } => {
            expr_into(out, left);
            for (op, c) in ops.iter().zip(comparators) {
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                expr_into(out, c);
            }
        }
        K::Call { func, args } => {
            expr_into(out, func);
            out.push('(');
            args_into(out, args);
            out.push(')');
        }
        K::Attribute { value, attr } => {
            expr_into(out, value);
            // `1 .real` needs the space to avoid lexing as a float.
            if matches!(value.kind, K::Number(_)) {
                out.push(' ');
            }
            out.push('.');
            out.push_str(&attr.name);
        }
        K::Subscript { value, slice } => {
            expr_into(out, value);
            out.push('[');
            expr_into(out, slice);
            out.push(']');
        }
        K::Slice { lower, upper, step } => {
            if let Some(l) = lower {
                expr_into(out, l);
            }
            out.push(':');
            if let Some(u) = upper {
                expr_into(out, u);
            }
            if let Some(s) = step {
                out.push(':');
                expr_into(out, s);
            }
        }
        K::Starred(v) => {
            out.push('*');
            expr_into(out, v);
        }
        K::DoubleStarred(v) => {
            out.push_str("**");
            expr_into(out, v);
        }
        K::Paren(v) => {
            out.push('(');
            expr_into(out, v);
            out.push(')');
        }
    }
}

fn pattern_into(out: &mut String, p: &Pattern) {
    match &p.kind {
        PatternKind::Value(e) => expr_into(out, e),
        PatternKind::Capture(id) => out.push_str(&id.name),
        PatternKind::Wildcard => out.push('_'),
        PatternKind::Sequence { items, bracket } => {
            let (open, close) = match bracket {
                Some('[') => ("[", "]"),
                Some(_) => ("(", ")"),
                None => ("", ""),
            };
            out.push_str(open);
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                pattern_into(out, it);
            }
            if items.len() == 1 && bracket != &Some('[') {
                out.push(',');
            }
            out.push_str(close);
        }
        PatternKind::Star(name) => {
            out.push('*');
            out.push_str(name.as_ref().map(|n| n.name.as_str()).unwrap_or("_"));
        }
        PatternKind::Mapping { items, rest } => {
            out.push('{');
            let mut first = true;
            for (k, v) in items {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                expr_into(out, k);
                out.push_str(": ");
                pattern_into(out, v);
            }
            if let Some(r) = rest {
                if !first {
                    out.push_str(", ");
                }
                out.push_str("**");
                out.push_str(&r.name);
            }
            out.push('}');
        }
        PatternKind::Class { cls, args, kwargs } => {
            expr_into(out, cls);
            out.push('(');
            let mut first = true;
            for a in args {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                pattern_into(out, a);
            }
            for (k, v) in kwargs {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                out.push_str(&k.name);
                out.push('=');
                pattern_into(out, v);
            }
            out.push(')');
        }
        PatternKind::Or(alts) => {
            for (i, a) in alts.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                pattern_into(out, a);
            }
        }
        PatternKind::As { pattern, name } => {
            pattern_into(out, pattern);
            out.push_str(" as ");
            out.push_str(&name.name);
        }
        PatternKind::Group(inner) => {
            out.push('(');
            pattern_into(out, inner);
            out.push(')');
        }
    }
}
