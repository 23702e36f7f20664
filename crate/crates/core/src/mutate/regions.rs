//! Editable regions under the function-bodies-only policy.

use crate::syntax::ast::*;
use crate::syntax::visit::stmt_bodies;

/// Where a statement sits relative to the nearest enclosing definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Module,
    Class,
    Function,
}

/// Every statement with the region it belongs to, in pre-order.
pub fn statements(module: &Module) -> Vec<(&Stmt, Region)> {
    let mut out = Vec::new();
    collect(&module.body, Region::Module, &mut out);
    out
}

fn collect<'a>(body: &'a [Stmt], region: Region, out: &mut Vec<(&'a Stmt, Region)>) {
    for s in body {
        out.push((s, region));
        let inner = match &s.kind {
            StmtKind::FunctionDef(_) => Region::Function,
            StmtKind::ClassDef(_) => Region::Class,
            _ => region,
        };
        for b in stmt_bodies(s) {
            collect(b, inner, out);
        }
    }
}

/// Statements inside function bodies (the editable region).
pub fn function_statements(module: &Module) -> Vec<&Stmt> {
    statements(module)
        .into_iter()
        .filter(|(_, r)| *r == Region::Function)
        .map(|(s, _)| s)
        .collect()
}
