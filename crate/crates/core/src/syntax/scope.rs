//! Python scope analysis: which names are bound where, and which bindings
//! may be safely renamed.
//!
//! The analysis runs in two passes over the tree. The first pass records,
//! for each scope, the names it binds and its `global`/`nonlocal`
//! declarations. The second pass resolves every identifier occurrence with
//! the LEGB rule (class scopes are invisible to nested scopes; the first
//! iterable of a comprehension is evaluated in the enclosing scope; `:=`
//! binds in the nearest non-comprehension scope).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use super::ast::*;
use super::is_builtin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BindingKind {
    Parameter,
    LocalAssignment,
    LoopTarget,
    ComprehensionTarget,
    WithTarget,
    ExceptTarget,
}

/// Why a spelling is never renamed anywhere in the program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExclusionReason {
    Builtin,
    GlobalOrNonlocal,
    Import,
    FunctionName,
    ClassName,
    Attribute,
    KeywordArgument,
    /// Appears inside a self-documenting f-string field (`{x=}`), whose
    /// output includes the source spelling.
    DebugFString,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::Builtin => "builtin",
            ExclusionReason::GlobalOrNonlocal => "global/nonlocal-declared",
            ExclusionReason::Import => "import",
            ExclusionReason::FunctionName => "function-name",
            ExclusionReason::ClassName => "class-name",
            ExclusionReason::Attribute => "attribute",
            ExclusionReason::KeywordArgument => "keyword-argument-use",
            ExclusionReason::DebugFString => "debug-fstring",
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScopeKind {
    Module,
    Class,
    Function,
    Lambda,
    Comprehension,
}

/// One renameable binding: a name bound in one particular scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub name: String,
    pub kind: BindingKind,
    pub scope: usize,
    /// Span of the first binding occurrence.
    pub def_span: Span,
    /// Every occurrence resolving to this binding (including binding
    /// sites), in source order.
    pub refs: Vec<Span>,
}

#[derive(Debug, Clone, Default)]
pub struct ScopeTable {
    /// Renameable bindings ordered by first binding position.
    pub bindings: Vec<Binding>,
    pub excluded: BTreeMap<String, ExclusionReason>,
    /// Every identifier spelling occurring anywhere in the program.
    pub identifiers: BTreeSet<String>,
    /// Spellings bound anywhere (any scope, any binding form).
    pub bound_names: BTreeSet<String>,
    /// Number of variable occurrences (loads and binding sites) per spelling.
    pub occurrences: BTreeMap<String, usize>,
    /// Position of a call to `locals`, `vars`, `eval`, `exec`, `globals`
    /// or `dir`; such programs observe names at run time, so nothing is
    /// reported as renameable.
    pub dynamic_access: Option<Span>,
}

impl ScopeTable {
    pub fn renameable_names(&self) -> BTreeSet<&str> {
        self.bindings.iter().map(|b| b.name.as_str()).collect()
    }
}

pub fn analyze_scopes(module: &Module) -> ScopeTable {
    analyze_scopes_excluding(module, &[])
}

/// Like [`analyze_scopes`], additionally treating `keyword_names` as used
/// for keyword arguments (e.g. by a call site outside the program).
pub fn analyze_scopes_excluding(module: &Module, keyword_names: &[String]) -> ScopeTable {
    let mut w = Walker::default();
    w.scopes.push(ScopeData::new(ScopeKind::Module, None, false));
    w.module(module);
    w.pass = Pass::Resolve;
    w.next_scope = 1;
    w.module(module);

    let mut excluded = std::mem::take(&mut w.excluded);
    for name in keyword_names {
        excluded.entry(name.clone()).or_insert(ExclusionReason::KeywordArgument);
    }
    for name in &w.identifiers {
        if is_builtin(name) {
            excluded.entry(name.clone()).or_insert(ExclusionReason::Builtin);
        }
    }

    let mut bindings = Vec::new();
    if w.dynamic_access.is_none() {
        for ((scope, name), mut refs) in w.refs {
            if excluded.contains_key(&name) || !w.scopes[scope].in_function {
                continue;
            }
            let Some(Some((def_span, kind))) = w.scopes[scope].bound.get(&name).copied() else {
                continue;
            };
            refs.sort_by_key(|s| s.start);
            refs.dedup_by(|a, b| a.same_as(*b));
            bindings.push(Binding {
                name,
                kind,
                scope,
                def_span,
                refs,
            });
        }
    }
    bindings.sort_by_key(|b| (b.def_span.start, b.scope));
    ScopeTable {
        bindings,
        excluded,
        identifiers: w.identifiers,
        bound_names: w.bound_names,
        occurrences: w.occurrences,
        dynamic_access: w.dynamic_access,
    }
}

const DYNAMIC: &[&str] = &["locals", "vars", "eval", "exec", "globals", "dir"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
enum Pass {
    #[default]
    Collect,
    Resolve,
}

struct ScopeData {
    kind: ScopeKind,
    parent: Option<usize>,
    /// Bound names: `Some((first span, kind))` for ordinary variables,
    /// `None` for def/class/import bindings.
    bound: HashMap<String, Option<(Span, BindingKind)>>,
    globals: HashSet<String>,
    nonlocals: HashSet<String>,
    /// True for function and lambda scopes and non-class scopes nested in one.
    in_function: bool,
}

impl ScopeData {
    fn new(kind: ScopeKind, parent: Option<usize>, in_function: bool) -> Self {
        ScopeData {
            kind,
            parent,
            bound: HashMap::new(),
            globals: HashSet::new(),
            nonlocals: HashSet::new(),
            in_function,
        }
    }
}

#[derive(Default)]
struct Walker {
    pass: Pass,
    scopes: Vec<ScopeData>,
    stack: Vec<usize>,
    next_scope: usize,
    refs: BTreeMap<(usize, String), Vec<Span>>,
    excluded: BTreeMap<String, ExclusionReason>,
    identifiers: BTreeSet<String>,
    bound_names: BTreeSet<String>,
    occurrences: BTreeMap<String, usize>,
    dynamic_access: Option<Span>,
}

impl Walker {
    fn cur(&self) -> usize {
        *self.stack.last().unwrap_or(&0)
    }

    fn exclude(&mut self, name: &str, reason: ExclusionReason) {
        if self.pass == Pass::Collect {
            self.excluded.entry(name.to_string()).or_insert(reason);
        }
    }

    fn ident_seen(&mut self, name: &str) {
        if self.pass == Pass::Collect && !self.identifiers.contains(name) {
            self.identifiers.insert(name.to_string());
        }
    }

    fn enter(&mut self, kind: ScopeKind) {
        let parent = self.cur();
        let id = if self.pass == Pass::Collect {
            // Class bodies are never renamed: their names double as attributes.
            let in_function = matches!(kind, ScopeKind::Function | ScopeKind::Lambda)
                || (kind != ScopeKind::Class && self.scopes[parent].in_function);
            self.scopes.push(ScopeData::new(kind, Some(parent), in_function));
            self.scopes.len() - 1
        } else {
            let id = self.next_scope;
            self.next_scope += 1;
            id
        };
        self.stack.push(id);
    }

    fn leave(&mut self) {
        self.stack.pop();
    }

    fn bind_in(&mut self, scope: usize, id: &Ident, kind: Option<BindingKind>) {
        self.ident_seen(&id.name);
        match self.pass {
            Pass::Collect => {
                self.bound_names.insert(id.name.clone());
                let bound = &mut self.scopes[scope].bound;
                match (bound.get(&id.name).copied(), kind) {
                    // A def/class/import anywhere makes the name non-variable.
                    (_, None) | (Some(None), _) => {
                        bound.insert(id.name.clone(), None);
                    }
                    (Some(Some((first, _))), Some(_)) if first.start <= id.span.start => {}
                    (_, Some(k)) => {
                        bound.insert(id.name.clone(), Some((id.span, k)));
                    }
                }
            }
            Pass::Resolve => self.reference_from(scope, id),
        }
    }

    fn bind(&mut self, id: &Ident, kind: Option<BindingKind>) {
        let s = self.cur();
        self.bind_in(s, id, kind);
    }

    fn load(&mut self, id: &Ident) {
        self.ident_seen(&id.name);
        if self.pass == Pass::Resolve {
            let s = self.cur();
            self.reference_from(s, id);
        }
    }

    fn reference_from(&mut self, scope: usize, id: &Ident) {
        *self.occurrences.entry(id.name.clone()).or_default() += 1;
        if let Some(target) = self.resolve(scope, &id.name) {
            self.refs.entry((target, id.name.clone())).or_default().push(id.span);
        }
    }

    fn resolve(&self, scope: usize, name: &str) -> Option<usize> {
        let sc = &self.scopes[scope];
        if sc.globals.contains(name) {
            return self.module_binding(name);
        }
        if sc.nonlocals.contains(name) {
            return self.enclosing_function_binding(sc.parent, name);
        }
        if sc.bound.contains_key(name) {
            return Some(scope);
        }
        self.enclosing_function_binding(sc.parent, name)
            .or_else(|| self.module_binding(name))
    }

    fn enclosing_function_binding(&self, mut p: Option<usize>, name: &str) -> Option<usize> {
        while let Some(q) = p {
            let sq = &self.scopes[q];
            match sq.kind {
                ScopeKind::Module => return None,
                ScopeKind::Class => {}
                _ => {
                    if sq.globals.contains(name) {
                        return self.module_binding(name);
                    }
                    if sq.nonlocals.contains(name) {
                        return self.enclosing_function_binding(sq.parent, name);
                    }
                    if sq.bound.contains_key(name) {
                        return Some(q);
                    }
                }
            }
            p = sq.parent;
        }
        None
    }

    fn module_binding(&self, name: &str) -> Option<usize> {
        self.scopes[0].bound.contains_key(name).then_some(0)
    }

    /// Nearest enclosing scope that is not a comprehension (walrus target).
    fn walrus_scope(&self) -> usize {
        self.stack
            .iter()
            .rev()
            .copied()
            .find(|&s| self.scopes[s].kind != ScopeKind::Comprehension)
            .unwrap_or(0)
    }

    // ---- statements ----

    fn module(&mut self, m: &Module) {
        self.stack.clear();
        self.stack.push(0);
        self.body(&m.body);
    }

    fn body(&mut self, body: &[Stmt]) {
        for s in body {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, stmt: &Stmt) {
        use StmtKind as S;
        match &stmt.kind {
            S::FunctionDef(f) => {
                for d in &f.decorators {
                    self.expr(d);
                }
                self.params_outer(&f.params);
                if let Some(r) = &f.returns {
                    self.expr(r);
                }
                self.exclude(&f.name.name, ExclusionReason::FunctionName);
                self.bind(&f.name, None);
                self.enter(ScopeKind::Function);
                self.params_inner(&f.params);
                self.body(&f.body);
                self.leave();
            }
            S::ClassDef(c) => {
                for d in &c.decorators {
                    self.expr(d);
                }
                self.args(&c.bases);
                self.exclude(&c.name.name, ExclusionReason::ClassName);
                self.bind(&c.name, None);
                self.enter(ScopeKind::Class);
                self.body(&c.body);
                self.leave();
            }
            S::Return(v) => {
                if let Some(v) = v {
                    self.expr(v);
                }
            }
            S::Delete(targets) => {
                for t in targets {
                    self.target(t, BindingKind::LocalAssignment);
                }
            }
            S::Assign { targets, value } => {
                self.expr(value);
                for t in targets {
                    self.target(t, BindingKind::LocalAssignment);
                }
            }
            S::AugAssign { target, value, .. } => {
                self.expr(value);
                self.target(target, BindingKind::LocalAssignment);
            }
            S::AnnAssign {
                target,
                annotation,
                value,
            } => {
                self.expr(annotation);
                if let Some(v) = value {
                    self.expr(v);
                }
                self.target(target, BindingKind::LocalAssignment);
            }
            S::For(f) => {
                self.expr(&f.iter);
                self.target(&f.target, BindingKind::LoopTarget);
                self.body(&f.body);
                self.body(&f.orelse);
            }
            S::While { test, body, orelse } => {
                self.expr(test);
                self.body(body);
                self.body(orelse);
            }
            S::If { branches, orelse } => {
                for b in branches {
                    self.expr(&b.test);
                    self.body(&b.body);
                }
                self.body(orelse);
            }
            S::With { items, body, .. } => {
                for it in items {
                    self.expr(&it.context);
                    if let Some(t) = &it.target {
                        self.target(t, BindingKind::WithTarget);
                    }
                }
                self.body(body);
            }
            S::Match { subject, cases } => {
                self.expr(subject);
                for c in cases {
                    self.pattern(&c.pattern);
                    if let Some(g) = &c.guard {
                        self.expr(g);
                    }
                    self.body(&c.body);
                }
            }
            S::Raise { exc, cause } => {
                if let Some(e) = exc {
                    self.expr(e);
                }
                if let Some(c) = cause {
                    self.expr(c);
                }
            }
            S::Try {
                body,
                handlers,
                orelse,
                finalbody,
            } => {
                self.body(body);
                for h in handlers {
                    if let Some(t) = &h.typ {
                        self.expr(t);
                    }
                    if let Some(n) = &h.name {
                        self.bind(n, Some(BindingKind::ExceptTarget));
                    }
                    self.body(&h.body);
                }
                self.body(orelse);
                self.body(finalbody);
            }
            S::Assert { test, msg } => {
                self.expr(test);
                if let Some(m) = msg {
                    self.expr(m);
                }
            }
            S::Import(names) => {
                for a in names {
                    for part in a.name.split('.') {
                        self.ident_seen(part);
                    }
                    let bound = match &a.asname {
                        Some(asn) => asn.clone(),
                        None => {
                            let first = a.name.split('.').next().unwrap_or("");
                            Ident {
                                name: first.to_string(),
                                span: Span::new(a.span.start, a.span.start + first.len()),
                            }
                        }
                    };
                    self.exclude(&bound.name, ExclusionReason::Import);
                    self.bind(&bound, None);
                }
            }
            S::ImportFrom { module, names, .. } => {
                if let Some(m) = module {
                    for part in m.split('.') {
                        self.ident_seen(part);
                    }
                }
                for a in names {
                    if a.name == "*" {
                        continue;
                    }
                    self.ident_seen(&a.name);
                    let bound = match &a.asname {
                        Some(asn) => asn.clone(),
                        None => Ident {
                            name: a.name.clone(),
                            span: Span::new(a.span.start, a.span.start + a.name.len()),
                        },
                    };
                    self.exclude(&bound.name, ExclusionReason::Import);
                    self.bind(&bound, None);
                }
            }
            S::Global(names) | S::Nonlocal(names) => {
                let is_global = matches!(stmt.kind, S::Global(_));
                for n in names {
                    self.ident_seen(&n.name);
                    self.exclude(&n.name, ExclusionReason::GlobalOrNonlocal);
                    if self.pass == Pass::Collect {
                        let s = self.cur();
                        if is_global {
                            self.scopes[s].globals.insert(n.name.clone());
                        } else {
                            self.scopes[s].nonlocals.insert(n.name.clone());
                        }
                    }
                }
            }
            S::Expr(e) => self.expr(e),
            S::Pass | S::Break | S::Continue => {}
        }
    }

    /// Parts of a parameter list evaluated in the enclosing scope.
    fn params_outer(&mut self, params: &Params) {
        for p in params.params() {
            if let Some(a) = &p.annotation {
                self.expr(a);
            }
            if let Some(d) = &p.default {
                self.expr(d);
            }
        }
    }

    fn params_inner(&mut self, params: &Params) {
        for p in params.params() {
            self.bind(&p.name, Some(BindingKind::Parameter));
        }
    }

    fn target(&mut self, t: &Expr, kind: BindingKind) {
        use ExprKind as K;
        match &t.kind {
            K::Name(id) => self.bind(id, Some(kind)),
            K::Tuple { elts, .. } | K::List(elts) => {
                for e in elts {
                    self.target(e, kind);
                }
            }
            K::Starred(inner) | K::Paren(inner) => self.target(inner, kind),
            _ => self.expr(t),
        }
    }

    fn pattern(&mut self, p: &Pattern) {
        let kind = Some(BindingKind::LocalAssignment);
        match &p.kind {
            PatternKind::Value(e) => self.expr(e),
            PatternKind::Capture(id) => self.bind(id, kind),
            PatternKind::Wildcard => {}
            PatternKind::Sequence { items, .. } => {
                for it in items {
                    self.pattern(it);
                }
            }
            PatternKind::Star(name) => {
                if let Some(n) = name {
                    self.bind(n, kind);
                }
            }
            PatternKind::Mapping { items, rest } => {
                for (k, v) in items {
                    self.expr(k);
                    self.pattern(v);
                }
                if let Some(r) = rest {
                    self.bind(r, kind);
                }
            }
            PatternKind::Class { cls, args, kwargs } => {
                self.expr(cls);
                for a in args {
                    self.pattern(a);
                }
                for (k, v) in kwargs {
                    self.ident_seen(&k.name);
                    self.exclude(&k.name, ExclusionReason::Attribute);
                    self.pattern(v);
                }
            }
            PatternKind::Or(alts) => {
                for a in alts {
                    self.pattern(a);
                }
            }
            PatternKind::As { pattern, name } => {
                self.pattern(pattern);
                self.bind(name, kind);
            }
            PatternKind::Group(inner) => self.pattern(inner),
        }
    }

    fn args(&mut self, args: &[Arg]) {
        for a in args {
            match a {
                Arg::Positional(e) | Arg::Starred(e) | Arg::DoubleStarred(e) => self.expr(e),
                Arg::Keyword { name, value } => {
                    self.ident_seen(&name.name);
                    self.exclude(&name.name, ExclusionReason::KeywordArgument);
                    self.expr(value);
                }
            }
        }
    }

    fn comprehension(&mut self, gens: &[Comprehension], elts: &[&Expr]) {
        let Some(first) = gens.first() else { return };
        self.expr(&first.iter);
        self.enter(ScopeKind::Comprehension);
        for (i, g) in gens.iter().enumerate() {
            if i > 0 {
                self.expr(&g.iter);
            }
            self.target(&g.target, BindingKind::ComprehensionTarget);
            for cond in &g.ifs {
                self.expr(cond);
            }
        }
        for e in elts {
            self.expr(e);
        }
        self.leave();
    }

    fn fpieces(&mut self, pieces: &[FPiece]) {
        for p in pieces {
            if let FPiece::Field(f) = p {
                if f.debug_text.is_some() {
                    let mut names = Vec::new();
                    collect_names(&f.expr, &mut names);
                    for n in names {
                        self.exclude(&n, ExclusionReason::DebugFString);
                    }
                }
                self.expr(&f.expr);
                if let Some(spec) = &f.format_spec {
                    self.fpieces(spec);
                }
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        use ExprKind as K;
        match &e.kind {
            K::Name(id) => self.load(id),
            K::Number(_) | K::True | K::False | K::None | K::Ellipsis => {}
            K::Strings(parts) => {
                for p in parts {
                    if let StrPart::FString(f) = p {
                        self.fpieces(&f.pieces);
                    }
                }
            }
            K::BoolOp { values, .. } => {
                for v in values {
                    self.expr(v);
                }
            }
            K::NamedExpr { target, value } => {
                self.expr(value);
                let s = self.walrus_scope();
                self.bind_in(s, target, Some(BindingKind::LocalAssignment));
            }
            K::BinOp { left, right, .. } => {
                self.expr(left);
                self.expr(right);
            }
            K::UnaryOp { operand, .. } => self.expr(operand),
            K::Lambda { params, body } => {
                self.params_outer(params);
                self.enter(ScopeKind::Lambda);
                self.params_inner(params);
                self.expr(body);
                self.leave();
            }
            K::IfExp { test, body, orelse } => {
                self.expr(test);
                self.expr(body);
                self.expr(orelse);
            }
            K::Dict(items) => {
                for it in items {
                    match it {
                        DictItem::Pair(k, v) => {
                            self.expr(k);
                            self.expr(v);
                        }
                        DictItem::Unpack(v) => self.expr(v),
                    }
                }
            }
            K::Set(elts) | K::List(elts) | K::Tuple { elts, .. } => {
                for x in elts {
                    self.expr(x);
                }
            }
            K::ListComp { elt, generators }
            | K::SetComp { elt, generators }
            | K::GeneratorExp { elt, generators, .. } => self.comprehension(generators, &[elt]),
            K::DictComp {
                key,
                value,
                generators,
            } => self.comprehension(generators, &[key, value]),
            K::Await(v) | K::YieldFrom(v) | K::Starred(v) | K::DoubleStarred(v) | K::Paren(v) => {
                self.expr(v)
            }
            K::Yield(v) => {
                if let Some(v) = v {
                    self.expr(v);
                }
            }
            K::Compare {
                left, comparators, ..
            } => {
                self.expr(left);
                for c in comparators {
                    self.expr(c);
                }
            }
            K::Call { func, args } => {
                if let K::Name(id) = &func.unparen().kind {
                    if DYNAMIC.contains(&id.name.as_str())
                        && self.pass == Pass::Resolve
                        && self.resolve(self.cur(), &id.name).is_none()
                        && self.dynamic_access.is_none()
                    {
                        self.dynamic_access = Some(id.span);
                    }
                }
                self.expr(func);
                self.args(args);
            }
            K::Attribute { value, attr } => {
                self.expr(value);
                self.ident_seen(&attr.name);
                self.exclude(&attr.name, ExclusionReason::Attribute);
            }
            K::Subscript { value, slice } => {
                self.expr(value);
                self.expr(slice);
            }
            K::Slice { lower, upper, step } => {
                for part in [lower, upper, step].into_iter().flatten() {
                    self.expr(part);
                }
            }
        }
    }
}

/// Collects the spellings of all `Name` nodes inside `e`.
fn collect_names(e: &Expr, out: &mut Vec<String>) {
    super::visit::walk_expr(e, &mut |x| {
        if let ExprKind::Name(id) = &x.kind {
            out.push(id.name.clone());
        }
    });
}
