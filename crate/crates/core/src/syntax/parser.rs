//! Recursive-descent parser producing [`Module`] trees.

use super::ast::*;
use super::lexer::{error_at, tokenize, Tok, Token};
use super::SyntaxError;

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

pub fn is_keyword(name: &str) -> bool {
    KEYWORDS.contains(&name)
}

const AUG_OPS: &[&str] = &[
    "+=", "-=", "*=", "@=", "/=", "//=", "%=", "**=", "<<=", ">>=", "|=", "^=", "&=",
];

pub fn parse_module(text: &str) -> Result<Module, SyntaxError> {
    let tokens = tokenize(text)?;
    let mut p = Parser::new(text, tokens, 0);
    p.file()
}

/// Parses a standalone expression (surrounding whitespace allowed).
pub fn parse_expression(text: &str) -> Result<Expr, SyntaxError> {
    let wrapped = format!("({})", text);
    let tokens = tokenize(&wrapped)?;
    let mut p = Parser::new(&wrapped, tokens, 0);
    let e = p.star_expressions()?;
    while p.at(&Tok::Newline) {
        p.bump();
    }
    if !p.at(&Tok::EndMarker) {
        return Err(p.err_here("unexpected trailing input"));
    }
    let e = unwrap_outer(e);
    Ok(shift_expr(e, -1))
}

fn unwrap_outer(e: Expr) -> Expr {
    match e.kind {
        ExprKind::Paren(inner) => *inner,
        ExprKind::Tuple { elts, parenthesized: true } => {
            let span = Span::new(e.span.start + 1, e.span.end - 1);
            Expr::new(ExprKind::Tuple { elts, parenthesized: false }, span)
        }
        ExprKind::GeneratorExp { elt, generators, .. } => Expr::new(
            ExprKind::GeneratorExp { elt, generators, bare: true },
            Span::new(e.span.start + 1, e.span.end - 1),
        ),
        _ => e,
    }
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<Token>,
    idx: usize,
    prev_end: usize,
    /// Added to every span; non-zero when parsing f-string fields.
    base: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl<'a> Parser<'a> {
    fn new(text: &'a str, tokens: Vec<Token>, base: usize) -> Self {
        Parser {
            text,
            tokens,
            idx: 0,
            prev_end: 0,
            base,
        }
    }

    // ---- token helpers ----

    fn tok(&self) -> &Tok {
        &self.tokens[self.idx].tok
    }

    fn tok_at(&self, n: usize) -> &Tok {
        let i = (self.idx + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn start(&self) -> usize {
        self.tokens[self.idx].span.start
    }

    fn span_from(&self, start: usize) -> Span {
        Span::new(start, self.prev_end.max(start))
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.idx].clone();
        if !matches!(t.tok, Tok::Newline | Tok::Indent | Tok::Dedent | Tok::EndMarker) {
            self.prev_end = t.span.end;
        }
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        t
    }

    fn at(&self, t: &Tok) -> bool {
        self.tok() == t
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.tok(), Tok::Op(o) if *o == op)
    }

    fn at_op_n(&self, n: usize, op: &str) -> bool {
        matches!(self.tok_at(n), Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.tok(), Tok::Name(n) if n == kw)
    }

    fn at_kw_n(&self, n: usize, kw: &str) -> bool {
        matches!(self.tok_at(n), Tok::Name(s) if s == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err_here(&self, msg: &str) -> SyntaxError {
        let found = match self.tok() {
            Tok::Name(n) => format!("'{}'", n),
            Tok::Number(n) => format!("'{}'", n),
            Tok::Str(_) => "string".to_string(),
            Tok::Op(o) => format!("'{}'", o),
            Tok::Newline => "newline".to_string(),
            Tok::Indent => "indent".to_string(),
            Tok::Dedent => "dedent".to_string(),
            Tok::EndMarker => "end of input".to_string(),
        };
        error_at(self.text, self.start(), format!("{} (found {})", msg, found))
    }

    fn expect_op(&mut self, op: &str) -> PResult<Token> {
        if self.at_op(op) {
            Ok(self.bump())
        } else {
            Err(self.err_here(&format!("expected '{}'", op)))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err_here(&format!("expected '{}'", kw)))
        }
    }

    fn expect_newline(&mut self) -> PResult<()> {
        if self.at(&Tok::Newline) {
            self.bump();
            Ok(())
        } else if self.at(&Tok::EndMarker) {
            Ok(())
        } else {
            Err(self.err_here("expected end of statement"))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.tok().clone() {
            Tok::Name(n) if !is_keyword(&n) => {
                let t = self.bump();
                Ok(Ident {
                    name: n,
                    span: self.shift(t.span),
                })
            }
            _ => Err(self.err_here("expected identifier")),
        }
    }

    fn shift(&self, s: Span) -> Span {
        Span::new(s.start + self.base, s.end + self.base)
    }

    fn sp(&self, start: usize) -> Span {
        self.shift(self.span_from(start))
    }

    fn mk(&self, kind: ExprKind, start: usize) -> Expr {
        Expr::new(kind, self.sp(start))
    }

    // ---- statements ----

    fn file(&mut self) -> PResult<Module> {
        let mut body = Vec::new();
        while !self.at(&Tok::EndMarker) {
            if self.at(&Tok::Newline) {
                self.bump();
                continue;
            }
            if self.at(&Tok::Indent) {
                return Err(self.err_here("unexpected indent"));
            }
            body.extend(self.statement()?);
        }
        Ok(Module { body })
    }

    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        if let Some(stmt) = self.compound_statement()? {
            return Ok(vec![stmt]);
        }
        self.simple_statements()
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        if self.at(&Tok::Newline) {
            self.bump();
            if !self.at(&Tok::Indent) {
                return Err(self.err_here("expected an indented block"));
            }
            self.bump();
            let mut body = Vec::new();
            while !self.at(&Tok::Dedent) && !self.at(&Tok::EndMarker) {
                if self.at(&Tok::Newline) {
                    self.bump();
                    continue;
                }
                body.extend(self.statement()?);
            }
            if self.at(&Tok::Dedent) {
                self.bump();
            }
            Ok(body)
        } else {
            self.simple_statements()
        }
    }

    fn simple_statements(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = vec![self.small_statement()?];
        while self.eat_op(";") {
            if self.at(&Tok::Newline) || self.at(&Tok::EndMarker) {
                break;
            }
            out.push(self.small_statement()?);
        }
        self.expect_newline()?;
        Ok(out)
    }

    fn compound_statement(&mut self) -> PResult<Option<Stmt>> {
        let start = self.start();
        let stmt = match self.tok() {
            Tok::Op("@") => self.decorated()?,
            Tok::Name(n) => match n.as_str() {
                "def" => self.funcdef(Vec::new(), false, start)?,
                "class" => self.classdef(Vec::new(), start)?,
                "if" => self.if_stmt()?,
                "while" => self.while_stmt()?,
                "for" => self.for_stmt(false, start)?,
                "try" => self.try_stmt()?,
                "with" => self.with_stmt(false, start)?,
                "async" => {
                    self.bump();
                    match self.tok() {
                        Tok::Name(n) if n == "def" => self.funcdef(Vec::new(), true, start)?,
                        Tok::Name(n) if n == "for" => self.for_stmt(true, start)?,
                        Tok::Name(n) if n == "with" => self.with_stmt(true, start)?,
                        _ => return Err(self.err_here("expected 'def', 'for' or 'with' after 'async'")),
                    }
                }
                "match" => {
                    let save = (self.idx, self.prev_end);
                    match self.match_stmt() {
                        Ok(s) => s,
                        Err(_) => {
                            self.idx = save.0;
                            self.prev_end = save.1;
                            return Ok(None);
                        }
                    }
                }
                _ => return Ok(None),
            },
            _ => return Ok(None),
        };
        Ok(Some(stmt))
    }

    fn decorated(&mut self) -> PResult<Stmt> {
        let start = self.start();
        let mut decorators = Vec::new();
        while self.eat_op("@") {
            decorators.push(self.named_expression()?);
            self.expect_newline()?;
            while self.at(&Tok::Newline) {
                self.bump();
            }
        }
        if self.at_kw("def") {
            self.funcdef(decorators, false, start)
        } else if self.at_kw("async") && self.at_kw_n(1, "def") {
            self.bump();
            self.funcdef(decorators, true, start)
        } else if self.at_kw("class") {
            self.classdef(decorators, start)
        } else {
            Err(self.err_here("expected function or class definition after decorator"))
        }
    }

    fn funcdef(&mut self, decorators: Vec<Expr>, is_async: bool, start: usize) -> PResult<Stmt> {
        self.expect_kw("def")?;
        let name = self.ident()?;
        self.expect_op("(")?;
        let params = self.params(true, ")")?;
        self.expect_op(")")?;
        let returns = if self.eat_op("->") {
            Some(self.test()?)
        } else {
            None
        };
        self.expect_op(":")?;
        let body = self.block()?;
        Ok(Stmt {
            kind: StmtKind::FunctionDef(Box::new(FunctionDef {
                name,
                params,
                returns,
                body,
                decorators,
                is_async,
            })),
            span: self.sp(start),
        })
    }

    fn params(&mut self, annotations: bool, close: &str) -> PResult<Params> {
        let mut items = Vec::new();
        while !self.at_op(close) {
            if self.eat_op("/") {
                items.push(ParamItem::PosOnlyMarker);
            } else if self.at_op("*") && (self.at_op_n(1, ",") || self.at_op_n(1, close)) {
                self.bump();
                items.push(ParamItem::KwOnlyMarker);
            } else {
                let kind = if self.eat_op("**") {
                    ParamKind::KwArgs
                } else if self.eat_op("*") {
                    ParamKind::VarArgs
                } else {
                    ParamKind::Normal
                };
                let name = self.ident()?;
                let annotation = if annotations && self.eat_op(":") {
                    Some(if kind == ParamKind::VarArgs {
                        self.star_expression()?
                    } else {
                        self.test()?
                    })
                } else {
                    None
                };
                let default = if kind == ParamKind::Normal && self.eat_op("=") {
                    Some(self.test()?)
                } else {
                    None
                };
                items.push(ParamItem::Param(Param {
                    name,
                    kind,
                    annotation,
                    default,
                }));
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(Params { items })
    }

    fn classdef(&mut self, decorators: Vec<Expr>, start: usize) -> PResult<Stmt> {
        self.expect_kw("class")?;
        let name = self.ident()?;
        let bases = if self.eat_op("(") {
            let args = self.call_args()?;
            self.expect_op(")")?;
            args
        } else {
            Vec::new()
        };
        self.expect_op(":")?;
        let body = self.block()?;
        Ok(Stmt {
            kind: StmtKind::ClassDef(Box::new(ClassDef {
                name,
                bases,
                body,
                decorators,
            })),
            span: self.sp(start),
        })
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let start = self.start();
        self.expect_kw("if")?;
        let mut branches = Vec::new();
        let test = self.named_expression()?;
        self.expect_op(":")?;
        let body = self.block()?;
        branches.push(IfBranch { test, body });
        let mut orelse = Vec::new();
        loop {
            if self.eat_kw("elif") {
                let test = self.named_expression()?;
                self.expect_op(":")?;
                let body = self.block()?;
                branches.push(IfBranch { test, body });
            } else if self.at_kw("else") {
                self.bump();
                self.expect_op(":")?;
                orelse = self.block()?;
                break;
            } else {
                break;
            }
        }
        Ok(Stmt {
            kind: StmtKind::If { branches, orelse },
            span: self.sp(start),
        })
    }

    fn while_stmt(&mut self) -> PResult<Stmt> {
        let start = self.start();
        self.expect_kw("while")?;
        let test = self.named_expression()?;
        self.expect_op(":")?;
        let body = self.block()?;
        let orelse = self.else_block()?;
        Ok(Stmt {
            kind: StmtKind::While { test, body, orelse },
            span: self.sp(start),
        })
    }

    fn else_block(&mut self) -> PResult<Vec<Stmt>> {
        if self.eat_kw("else") {
            self.expect_op(":")?;
            self.block()
        } else {
            Ok(Vec::new())
        }
    }

    fn for_stmt(&mut self, is_async: bool, start: usize) -> PResult<Stmt> {
        self.expect_kw("for")?;
        let target = self.target_list()?;
        self.expect_kw("in")?;
        let iter = self.star_expressions()?;
        self.expect_op(":")?;
        let header = self.sp(start);
        let body = self.block()?;
        let orelse = self.else_block()?;
        Ok(Stmt {
            kind: StmtKind::For(Box::new(For {
                target,
                iter,
                body,
                orelse,
                is_async,
                header,
            })),
            span: self.sp(start),
        })
    }

    fn try_stmt(&mut self) -> PResult<Stmt> {
        let start = self.start();
        self.expect_kw("try")?;
        self.expect_op(":")?;
        let body = self.block()?;
        let mut handlers = Vec::new();
        while self.at_kw("except") {
            let hstart = self.start();
            self.bump();
            let star = self.eat_op("*");
            let mut typ = None;
            let mut name = None;
            if !self.at_op(":") {
                typ = Some(self.test_or_tuple()?);
                if self.eat_kw("as") {
                    name = Some(self.ident()?);
                }
            }
            self.expect_op(":")?;
            let hbody = self.block()?;
            handlers.push(ExceptHandler {
                typ,
                name,
                body: hbody,
                star,
                span: self.sp(hstart),
            });
        }
        let orelse = self.else_block()?;
        let finalbody = if self.eat_kw("finally") {
            self.expect_op(":")?;
            self.block()?
        } else {
            Vec::new()
        };
        if handlers.is_empty() && finalbody.is_empty() {
            return Err(self.err_here("expected 'except' or 'finally' block"));
        }
        Ok(Stmt {
            kind: StmtKind::Try {
                body,
                handlers,
                orelse,
                finalbody,
            },
            span: self.sp(start),
        })
    }

    /// `a, b` in an except clause without parentheses.
    fn test_or_tuple(&mut self) -> PResult<Expr> {
        let start = self.start();
        let first = self.test()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.at_op(":") || self.at_kw("as") {
                break;
            }
            elts.push(self.test()?);
        }
        Ok(self.mk(ExprKind::Tuple { elts, parenthesized: false }, start))
    }

    fn with_stmt(&mut self, is_async: bool, start: usize) -> PResult<Stmt> {
        self.expect_kw("with")?;
        let mut items = None;
        if self.at_op("(") {
            let save = (self.idx, self.prev_end);
            match self.paren_with_items() {
                Ok(it) => items = Some(it),
                Err(_) => {
                    self.idx = save.0;
                    self.prev_end = save.1;
                }
            }
        }
        let items = match items {
            Some(it) => it,
            None => {
                let mut it = vec![self.with_item()?];
                while self.eat_op(",") {
                    it.push(self.with_item()?);
                }
                it
            }
        };
        self.expect_op(":")?;
        let body = self.block()?;
        Ok(Stmt {
            kind: StmtKind::With { items, body, is_async },
            span: self.sp(start),
        })
    }

    fn paren_with_items(&mut self) -> PResult<Vec<WithItem>> {
        self.expect_op("(")?;
        let mut items = vec![self.with_item()?];
        while self.eat_op(",") {
            if self.at_op(")") {
                break;
            }
            items.push(self.with_item()?);
        }
        self.expect_op(")")?;
        if !self.at_op(":") {
            return Err(self.err_here("expected ':'"));
        }
        Ok(items)
    }

    fn with_item(&mut self) -> PResult<WithItem> {
        let context = self.test()?;
        let target = if self.eat_kw("as") {
            Some(self.single_target()?)
        } else {
            None
        };
        Ok(WithItem { context, target })
    }

    fn match_stmt(&mut self) -> PResult<Stmt> {
        let start = self.start();
        self.bump(); // soft keyword `match`
        let subject = self.star_named_expressions_as_tuple()?;
        self.expect_op(":")?;
        if !self.at(&Tok::Newline) {
            return Err(self.err_here("expected newline after match subject"));
        }
        self.bump();
        if !self.at(&Tok::Indent) {
            return Err(self.err_here("expected an indented block"));
        }
        self.bump();
        let mut cases = Vec::new();
        while self.at_kw("case") {
            self.bump();
            let pattern = self.open_sequence_pattern()?;
            let guard = if self.eat_kw("if") {
                Some(self.named_expression()?)
            } else {
                None
            };
            self.expect_op(":")?;
            let body = self.block()?;
            cases.push(MatchCase { pattern, guard, body });
        }
        if cases.is_empty() || !self.at(&Tok::Dedent) {
            return Err(self.err_here("expected 'case'"));
        }
        self.bump();
        Ok(Stmt {
            kind: StmtKind::Match { subject, cases },
            span: self.sp(start),
        })
    }

    fn small_statement(&mut self) -> PResult<Stmt> {
        let start = self.start();
        let kind = match self.tok().clone() {
            Tok::Name(n) => match n.as_str() {
                "pass" => {
                    self.bump();
                    StmtKind::Pass
                }
                "break" => {
                    self.bump();
                    StmtKind::Break
                }
                "continue" => {
                    self.bump();
                    StmtKind::Continue
                }
                "return" => {
                    self.bump();
                    if self.at_end_of_simple() {
                        StmtKind::Return(None)
                    } else {
                        StmtKind::Return(Some(self.star_expressions()?))
                    }
                }
                "del" => {
                    self.bump();
                    let start_t = self.start();
                    let mut elts = vec![self.target_atom()?];
                    let mut trailing = false;
                    while self.eat_op(",") {
                        if self.at_end_of_simple() {
                            trailing = true;
                            break;
                        }
                        elts.push(self.target_atom()?);
                    }
                    if trailing || elts.len() > 1 {
                        let _ = start_t;
                    }
                    StmtKind::Delete(elts)
                }
                "raise" => {
                    self.bump();
                    let mut exc = None;
                    let mut cause = None;
                    if !self.at_end_of_simple() {
                        exc = Some(self.test()?);
                        if self.eat_kw("from") {
                            cause = Some(self.test()?);
                        }
                    }
                    StmtKind::Raise { exc, cause }
                }
                "assert" => {
                    self.bump();
                    let test = self.test()?;
                    let msg = if self.eat_op(",") {
                        Some(self.test()?)
                    } else {
                        None
                    };
                    StmtKind::Assert { test, msg }
                }
                "global" | "nonlocal" => {
                    self.bump();
                    let mut names = vec![self.ident()?];
                    while self.eat_op(",") {
                        names.push(self.ident()?);
                    }
                    if n == "global" {
                        StmtKind::Global(names)
                    } else {
                        StmtKind::Nonlocal(names)
                    }
                }
                "import" => {
                    self.bump();
                    let mut names = vec![self.dotted_alias()?];
                    while self.eat_op(",") {
                        names.push(self.dotted_alias()?);
                    }
                    StmtKind::Import(names)
                }
                "from" => self.import_from()?,
                _ => self.expr_or_assign()?,
            },
            _ => self.expr_or_assign()?,
        };
        Ok(Stmt {
            kind,
            span: self.sp(start),
        })
    }

    fn at_end_of_simple(&self) -> bool {
        matches!(self.tok(), Tok::Newline | Tok::EndMarker | Tok::Op(";"))
    }

    fn dotted_name(&mut self) -> PResult<String> {
        let mut name = self.ident()?.name;
        while self.eat_op(".") {
            name.push('.');
            name.push_str(&self.ident()?.name);
        }
        Ok(name)
    }

    fn dotted_alias(&mut self) -> PResult<Alias> {
        let start = self.start();
        let name = self.dotted_name()?;
        let asname = if self.eat_kw("as") {
            Some(self.ident()?)
        } else {
            None
        };
        Ok(Alias {
            name,
            asname,
            span: self.sp(start),
        })
    }

    fn import_from(&mut self) -> PResult<StmtKind> {
        self.expect_kw("from")?;
        let mut level = 0;
        loop {
            if self.eat_op(".") {
                level += 1;
            } else if self.eat_op("...") {
                level += 3;
            } else {
                break;
            }
        }
        let module = if self.at_kw("import") {
            None
        } else {
            Some(self.dotted_name()?)
        };
        self.expect_kw("import")?;
        let mut names = Vec::new();
        if self.at_op("*") {
            let t = self.bump();
            names.push(Alias {
                name: "*".into(),
                asname: None,
                span: self.shift(t.span),
            });
        } else {
            let paren = self.eat_op("(");
            loop {
                let start = self.start();
                let name = self.ident()?.name;
                let asname = if self.eat_kw("as") {
                    Some(self.ident()?)
                } else {
                    None
                };
                names.push(Alias {
                    name,
                    asname,
                    span: self.sp(start),
                });
                if !self.eat_op(",") {
                    break;
                }
                if paren && self.at_op(")") {
                    break;
                }
            }
            if paren {
                self.expect_op(")")?;
            }
        }
        Ok(StmtKind::ImportFrom { module, level, names })
    }

    fn expr_or_assign(&mut self) -> PResult<StmtKind> {
        let first = if self.at_kw("yield") {
            self.yield_expr()?
        } else {
            self.star_expressions()?
        };
        if self.at_op("=") {
            let mut exprs = vec![first];
            while self.eat_op("=") {
                let e = if self.at_kw("yield") {
                    self.yield_expr()?
                } else {
                    self.star_expressions()?
                };
                exprs.push(e);
            }
            let value = exprs.pop().unwrap();
            return Ok(StmtKind::Assign { targets: exprs, value });
        }
        if let Tok::Op(op) = self.tok() {
            if AUG_OPS.contains(op) {
                let sym = &op[..op.len() - 1];
                let bin = BinOp::from_symbol(sym).unwrap();
                self.bump();
                let value = if self.at_kw("yield") {
                    self.yield_expr()?
                } else {
                    self.star_expressions()?
                };
                return Ok(StmtKind::AugAssign {
                    target: first,
                    op: bin,
                    value,
                });
            }
            if *op == ":" {
                self.bump();
                let annotation = self.test()?;
                let value = if self.eat_op("=") {
                    Some(if self.at_kw("yield") {
                        self.yield_expr()?
                    } else {
                        self.star_expressions()?
                    })
                } else {
                    None
                };
                return Ok(StmtKind::AnnAssign {
                    target: first,
                    annotation,
                    value,
                });
            }
        }
        Ok(StmtKind::Expr(first))
    }

    // ---- targets ----

    /// Target list of a `for` statement or comprehension: stops before `in`.
    fn target_list(&mut self) -> PResult<Expr> {
        let start = self.start();
        let first = self.single_target()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.at_kw("in") || self.at_op("=") {
                break;
            }
            elts.push(self.single_target()?);
        }
        Ok(self.mk(ExprKind::Tuple { elts, parenthesized: false }, start))
    }

    fn single_target(&mut self) -> PResult<Expr> {
        if self.at_op("*") {
            let start = self.start();
            self.bump();
            let inner = self.bitor()?;
            return Ok(self.mk(ExprKind::Starred(Box::new(inner)), start));
        }
        self.bitor()
    }

    fn target_atom(&mut self) -> PResult<Expr> {
        self.bitor()
    }

    // ---- expressions ----

    fn yield_expr(&mut self) -> PResult<Expr> {
        let start = self.start();
        self.expect_kw("yield")?;
        if self.eat_kw("from") {
            let e = self.test()?;
            return Ok(self.mk(ExprKind::YieldFrom(Box::new(e)), start));
        }
        let value = if self.at_end_of_simple() || self.at_op(")") || self.at_op("=") || self.at_op("]") || self.at_op("}") {
            None
        } else {
            Some(Box::new(self.star_expressions()?))
        };
        Ok(self.mk(ExprKind::Yield(value), start))
    }

    fn star_expressions(&mut self) -> PResult<Expr> {
        let start = self.start();
        let first = self.star_expression()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if !self.starts_expression() {
                break;
            }
            elts.push(self.star_expression()?);
        }
        Ok(self.mk(ExprKind::Tuple { elts, parenthesized: false }, start))
    }

    fn star_named_expressions_as_tuple(&mut self) -> PResult<Expr> {
        let start = self.start();
        let first = self.star_named_expression()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if !self.starts_expression() {
                break;
            }
            elts.push(self.star_named_expression()?);
        }
        Ok(self.mk(ExprKind::Tuple { elts, parenthesized: false }, start))
    }

    fn starts_expression(&self) -> bool {
        match self.tok() {
            Tok::Name(n) => !is_keyword(n) || matches!(n.as_str(), "not" | "lambda" | "await" | "None" | "True" | "False" | "yield"),
            Tok::Number(_) | Tok::Str(_) => true,
            Tok::Op(o) => matches!(*o, "(" | "[" | "{" | "-" | "+" | "~" | "*" | "..." | "**"),
            _ => false,
        }
    }

    fn star_expression(&mut self) -> PResult<Expr> {
        if self.at_op("*") {
            let start = self.start();
            self.bump();
            let e = self.bitor()?;
            return Ok(self.mk(ExprKind::Starred(Box::new(e)), start));
        }
        self.test()
    }

    fn star_named_expression(&mut self) -> PResult<Expr> {
        if self.at_op("*") {
            let start = self.start();
            self.bump();
            let e = self.bitor()?;
            return Ok(self.mk(ExprKind::Starred(Box::new(e)), start));
        }
        self.named_expression()
    }

    fn named_expression(&mut self) -> PResult<Expr> {
        if let Tok::Name(n) = self.tok() {
            if !is_keyword(n) && self.at_op_n(1, ":=") {
                let start = self.start();
                let target = self.ident()?;
                self.bump();
                let value = self.test()?;
                return Ok(self.mk(
                    ExprKind::NamedExpr {
                        target,
                        value: Box::new(value),
                    },
                    start,
                ));
            }
        }
        self.test()
    }

    /// `expression` in the grammar: lambda or conditional expression.
    fn test(&mut self) -> PResult<Expr> {
        if self.at_kw("lambda") {
            return self.lambda(true);
        }
        let start = self.start();
        let body = self.disjunction()?;
        if self.at_kw("if") {
            self.bump();
            let test = self.disjunction()?;
            self.expect_kw("else")?;
            let orelse = self.test()?;
            return Ok(self.mk(
                ExprKind::IfExp {
                    test: Box::new(test),
                    body: Box::new(body),
                    orelse: Box::new(orelse),
                },
                start,
            ));
        }
        Ok(body)
    }

    fn test_nocond(&mut self) -> PResult<Expr> {
        if self.at_kw("lambda") {
            return self.lambda(false);
        }
        self.disjunction()
    }

    fn lambda(&mut self, allow_cond: bool) -> PResult<Expr> {
        let start = self.start();
        self.expect_kw("lambda")?;
        let params = self.params(false, ":")?;
        self.expect_op(":")?;
        let body = if allow_cond { self.test()? } else { self.test_nocond()? };
        Ok(self.mk(
            ExprKind::Lambda {
                params,
                body: Box::new(body),
            },
            start,
        ))
    }

    fn disjunction(&mut self) -> PResult<Expr> {
        let start = self.start();
        let first = self.conjunction()?;
        if !self.at_kw("or") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("or") {
            values.push(self.conjunction()?);
        }
        Ok(self.mk(ExprKind::BoolOp { op: BoolOpKind::Or, values }, start))
    }

    fn conjunction(&mut self) -> PResult<Expr> {
        let start = self.start();
        let first = self.inversion()?;
        if !self.at_kw("and") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("and") {
            values.push(self.inversion()?);
        }
        Ok(self.mk(ExprKind::BoolOp { op: BoolOpKind::And, values }, start))
    }

    fn inversion(&mut self) -> PResult<Expr> {
        if self.at_kw("not") {
            let start = self.start();
            self.bump();
            let operand = self.inversion()?;
            return Ok(self.mk(
                ExprKind::UnaryOp {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
                start,
            ));
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> Option<CmpOp> {
        let op = match self.tok() {
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::NotEq,
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::LtE,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::GtE,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "not" && self.at_kw_n(1, "in") => {
                self.bump();
                CmpOp::NotIn
            }
            Tok::Name(n) if n == "is" => {
                if self.at_kw_n(1, "not") {
                    self.bump();
                    CmpOp::IsNot
                } else {
                    CmpOp::Is
                }
            }
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let start = self.start();
        let left = self.bitor()?;
        let mut ops = Vec::new();
        let mut comparators = Vec::new();
        while let Some(op) = self.comp_op() {
            ops.push(op);
            comparators.push(self.bitor()?);
        }
        if ops.is_empty() {
            return Ok(left);
        }
        Ok(self.mk(
            ExprKind::Compare {
                left: Box::new(left),
                ops,
                comparators,
            },
            start,
        ))
    }

    fn binary_level(&mut self, ops: &[&str], next: fn(&mut Self) -> PResult<Expr>) -> PResult<Expr> {
        let start = self.start();
        let mut left = next(self)?;
        loop {
            let op = match self.tok() {
                Tok::Op(o) if ops.contains(o) => BinOp::from_symbol(o).unwrap(),
                _ => break,
            };
            self.bump();
            let right = next(self)?;
            left = self.mk(
                ExprKind::BinOp {
                    left: Box::new(left),
                    op,
                    right: Box::new(right),
                },
                start,
            );
        }
        Ok(left)
    }

    fn bitor(&mut self) -> PResult<Expr> {
        self.binary_level(&["|"], Self::bitxor)
    }

    fn bitxor(&mut self) -> PResult<Expr> {
        self.binary_level(&["^"], Self::bitand)
    }

    fn bitand(&mut self) -> PResult<Expr> {
        self.binary_level(&["&"], Self::shift_expr)
    }

    fn shift_expr(&mut self) -> PResult<Expr> {
        self.binary_level(&["<<", ">>"], Self::sum)
    }

    fn sum(&mut self) -> PResult<Expr> {
        self.binary_level(&["+", "-"], Self::term)
    }

    fn term(&mut self) -> PResult<Expr> {
        self.binary_level(&["*", "/", "//", "%", "@"], Self::factor)
    }

    fn factor(&mut self) -> PResult<Expr> {
        let op = match self.tok() {
            Tok::Op("-") => Some(UnaryOp::Neg),
            Tok::Op("+") => Some(UnaryOp::Pos),
            Tok::Op("~") => Some(UnaryOp::Invert),
            _ => None,
        };
        if let Some(op) = op {
            let start = self.start();
            self.bump();
            let operand = self.factor()?;
            return Ok(self.mk(
                ExprKind::UnaryOp {
                    op,
                    operand: Box::new(operand),
                },
                start,
            ));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let start = self.start();
        let base = self.await_primary()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(self.mk(
                ExprKind::BinOp {
                    left: Box::new(base),
                    op: BinOp::Pow,
                    right: Box::new(exp),
                },
                start,
            ));
        }
        Ok(base)
    }

    fn await_primary(&mut self) -> PResult<Expr> {
        if self.at_kw("await") {
            let start = self.start();
            self.bump();
            let e = self.primary()?;
            return Ok(self.mk(ExprKind::Await(Box::new(e)), start));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.start();
        let mut e = self.atom()?;
        loop {
            if self.eat_op(".") {
                let attr = self.ident()?;
                e = self.mk(
                    ExprKind::Attribute {
                        value: Box::new(e),
                        attr,
                    },
                    start,
                );
            } else if self.eat_op("(") {
                let args = self.call_args()?;
                self.expect_op(")")?;
                e = self.mk(
                    ExprKind::Call {
                        func: Box::new(e),
                        args,
                    },
                    start,
                );
            } else if self.eat_op("[") {
                let slice = self.slices()?;
                self.expect_op("]")?;
                e = self.mk(
                    ExprKind::Subscript {
                        value: Box::new(e),
                        slice: Box::new(slice),
                    },
                    start,
                );
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn call_args(&mut self) -> PResult<Vec<Arg>> {
        let mut args = Vec::new();
        while !self.at_op(")") {
            if self.eat_op("**") {
                args.push(Arg::DoubleStarred(self.test()?));
            } else if self.at_op("*") {
                self.bump();
                args.push(Arg::Starred(self.test()?));
            } else if matches!(self.tok(), Tok::Name(n) if !is_keyword(n)) && self.at_op_n(1, "=") {
                let name = self.ident()?;
                self.bump();
                let value = self.test()?;
                args.push(Arg::Keyword { name, value });
            } else {
                let start = self.start();
                let e = self.named_expression()?;
                if self.at_kw("for") || (self.at_kw("async") && self.at_kw_n(1, "for")) {
                    let generators = self.comp_for()?;
                    let ge = self.mk(
                        ExprKind::GeneratorExp {
                            elt: Box::new(e),
                            generators,
                            bare: true,
                        },
                        start,
                    );
                    args.push(Arg::Positional(ge));
                } else {
                    args.push(Arg::Positional(e));
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(args)
    }

    fn slices(&mut self) -> PResult<Expr> {
        let start = self.start();
        let first = self.slice_item()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            elts.push(self.slice_item()?);
        }
        Ok(self.mk(ExprKind::Tuple { elts, parenthesized: false }, start))
    }

    fn slice_item(&mut self) -> PResult<Expr> {
        let start = self.start();
        let lower = if self.at_op(":") {
            None
        } else {
            let e = self.star_named_expression()?;
            if !self.at_op(":") {
                return Ok(e);
            }
            Some(Box::new(e))
        };
        self.expect_op(":")?;
        let upper = if self.at_op(":") || self.at_op(",") || self.at_op("]") {
            None
        } else {
            Some(Box::new(self.test()?))
        };
        let step = if self.eat_op(":") {
            if self.at_op(",") || self.at_op("]") {
                None
            } else {
                Some(Box::new(self.test()?))
            }
        } else {
            None
        };
        Ok(self.mk(ExprKind::Slice { lower, upper, step }, start))
    }

    fn comp_for(&mut self) -> PResult<Vec<Comprehension>> {
        let mut gens = Vec::new();
        loop {
            let is_async = if self.at_kw("async") && self.at_kw_n(1, "for") {
                self.bump();
                true
            } else {
                false
            };
            if !self.eat_kw("for") {
                break;
            }
            let target = self.target_list()?;
            self.expect_kw("in")?;
            let iter = self.disjunction()?;
            let mut ifs = Vec::new();
            while self.eat_kw("if") {
                ifs.push(self.test_nocond()?);
            }
            gens.push(Comprehension {
                target,
                iter,
                ifs,
                is_async,
            });
        }
        if gens.is_empty() {
            return Err(self.err_here("expected 'for'"));
        }
        Ok(gens)
    }

    fn at_comp_for(&self) -> bool {
        self.at_kw("for") || (self.at_kw("async") && self.at_kw_n(1, "for"))
    }

    fn atom(&mut self) -> PResult<Expr> {
        let start = self.start();
        match self.tok().clone() {
            Tok::Name(n) => match n.as_str() {
                "True" => {
                    self.bump();
                    Ok(self.mk(ExprKind::True, start))
                }
                "False" => {
                    self.bump();
                    Ok(self.mk(ExprKind::False, start))
                }
                "None" => {
                    self.bump();
                    Ok(self.mk(ExprKind::None, start))
                }
                _ if is_keyword(&n) => Err(self.err_here("invalid syntax")),
                _ => {
                    let id = self.ident()?;
                    let span = id.span;
                    Ok(Expr::new(ExprKind::Name(id), span))
                }
            },
            Tok::Number(text) => {
                self.bump();
                let value = number_value(&text);
                Ok(self.mk(ExprKind::Number(Number { text, value }), start))
            }
            Tok::Str(_) => self.strings(),
            Tok::Op("...") => {
                self.bump();
                Ok(self.mk(ExprKind::Ellipsis, start))
            }
            Tok::Op("(") => self.paren_atom(),
            Tok::Op("[") => {
                self.bump();
                if self.eat_op("]") {
                    return Ok(self.mk(ExprKind::List(Vec::new()), start));
                }
                let first = self.star_named_expression()?;
                if self.at_comp_for() {
                    let generators = self.comp_for()?;
                    self.expect_op("]")?;
                    return Ok(self.mk(
                        ExprKind::ListComp {
                            elt: Box::new(first),
                            generators,
                        },
                        start,
                    ));
                }
                let mut elts = vec![first];
                while self.eat_op(",") {
                    if self.at_op("]") {
                        break;
                    }
                    elts.push(self.star_named_expression()?);
                }
                self.expect_op("]")?;
                Ok(self.mk(ExprKind::List(elts), start))
            }
            Tok::Op("{") => self.brace_atom(),
            _ => Err(self.err_here("invalid syntax")),
        }
    }

    fn paren_atom(&mut self) -> PResult<Expr> {
        let start = self.start();
        self.expect_op("(")?;
        if self.eat_op(")") {
            return Ok(self.mk(ExprKind::Tuple { elts: Vec::new(), parenthesized: true }, start));
        }
        if self.at_kw("yield") {
            let y = self.yield_expr()?;
            self.expect_op(")")?;
            return Ok(self.mk(ExprKind::Paren(Box::new(y)), start));
        }
        let first = self.star_named_expression()?;
        if self.at_comp_for() {
            let generators = self.comp_for()?;
            self.expect_op(")")?;
            return Ok(self.mk(
                ExprKind::GeneratorExp {
                    elt: Box::new(first),
                    generators,
                    bare: false,
                },
                start,
            ));
        }
        if self.at_op(",") {
            let mut elts = vec![first];
            while self.eat_op(",") {
                if self.at_op(")") {
                    break;
                }
                elts.push(self.star_named_expression()?);
            }
            self.expect_op(")")?;
            return Ok(self.mk(ExprKind::Tuple { elts, parenthesized: true }, start));
        }
        self.expect_op(")")?;
        Ok(self.mk(ExprKind::Paren(Box::new(first)), start))
    }

    fn brace_atom(&mut self) -> PResult<Expr> {
        let start = self.start();
        self.expect_op("{")?;
        if self.eat_op("}") {
            return Ok(self.mk(ExprKind::Dict(Vec::new()), start));
        }
        // Dict display or comprehension.
        let first_item = if self.eat_op("**") {
            Some(DictItem::Unpack(self.bitor()?))
        } else {
            let e = self.star_named_expression()?;
            if self.eat_op(":") {
                let v = self.test()?;
                Some(DictItem::Pair(e, v))
            } else {
                // Set display or set comprehension.
                if self.at_comp_for() {
                    let generators = self.comp_for()?;
                    self.expect_op("}")?;
                    return Ok(self.mk(
                        ExprKind::SetComp {
                            elt: Box::new(e),
                            generators,
                        },
                        start,
                    ));
                }
                let mut elts = vec![e];
                while self.eat_op(",") {
                    if self.at_op("}") {
                        break;
                    }
                    elts.push(self.star_named_expression()?);
                }
                self.expect_op("}")?;
                return Ok(self.mk(ExprKind::Set(elts), start));
            }
        };
        let first_item = first_item.unwrap();
        if let DictItem::Pair(k, v) = &first_item {
            if self.at_comp_for() {
                let generators = self.comp_for()?;
                self.expect_op("}")?;
                return Ok(self.mk(
                    ExprKind::DictComp {
                        key: Box::new(k.clone()),
                        value: Box::new(v.clone()),
                        generators,
                    },
                    start,
                ));
            }
        }
        let mut items = vec![first_item];
        while self.eat_op(",") {
            if self.at_op("}") {
                break;
            }
            if self.eat_op("**") {
                items.push(DictItem::Unpack(self.bitor()?));
            } else {
                let k = self.test()?;
                self.expect_op(":")?;
                let v = self.test()?;
                items.push(DictItem::Pair(k, v));
            }
        }
        self.expect_op("}")?;
        Ok(self.mk(ExprKind::Dict(items), start))
    }

    fn strings(&mut self) -> PResult<Expr> {
        let start = self.start();
        let mut parts = Vec::new();
        while let Tok::Str(raw) = self.tok().clone() {
            let t = self.bump();
            let span = self.shift(t.span);
            let prefix_len = raw.find(['\'', '"']).unwrap_or(0);
            let prefix = &raw[..prefix_len];
            if prefix.to_ascii_lowercase().contains('f') {
                parts.push(StrPart::FString(self.fstring(&raw, span)?));
            } else {
                parts.push(StrPart::Plain { raw, span });
            }
        }
        Ok(self.mk(ExprKind::Strings(parts), start))
    }

    fn fstring(&self, raw: &str, span: Span) -> PResult<FString> {
        let prefix_len = raw.find(['\'', '"']).unwrap();
        let prefix = raw[..prefix_len].to_string();
        let rest = &raw[prefix_len..];
        let q = &rest[..1];
        let quote = if rest.len() >= 6 && rest.starts_with(&q.repeat(3)) {
            q.repeat(3)
        } else {
            q.to_string()
        };
        let body_start = prefix_len + quote.len();
        let body_end = raw.len() - quote.len();
        let mut pos = body_start;
        let is_raw = prefix.to_ascii_lowercase().contains('r');
        let pieces = fstring_pieces(raw, &mut pos, body_end, span.start, false, is_raw, self.text)?;
        Ok(FString {
            prefix,
            quote,
            pieces,
            span,
        })
    }

    // ---- match patterns ----

    fn open_sequence_pattern(&mut self) -> PResult<Pattern> {
        let start = self.start();
        let first = self.as_pattern()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op(":") || self.at_kw("if") {
                break;
            }
            items.push(self.as_pattern()?);
        }
        Ok(Pattern {
            kind: PatternKind::Sequence { items, bracket: None },
            span: self.sp(start),
        })
    }

    fn as_pattern(&mut self) -> PResult<Pattern> {
        let start = self.start();
        let p = self.or_pattern()?;
        if self.eat_kw("as") {
            let name = self.ident()?;
            return Ok(Pattern {
                kind: PatternKind::As {
                    pattern: Box::new(p),
                    name,
                },
                span: self.sp(start),
            });
        }
        Ok(p)
    }

    fn or_pattern(&mut self) -> PResult<Pattern> {
        let start = self.start();
        let first = self.closed_pattern()?;
        if !self.at_op("|") {
            return Ok(first);
        }
        let mut alts = vec![first];
        while self.eat_op("|") {
            alts.push(self.closed_pattern()?);
        }
        Ok(Pattern {
            kind: PatternKind::Or(alts),
            span: self.sp(start),
        })
    }

    fn closed_pattern(&mut self) -> PResult<Pattern> {
        let start = self.start();
        let kind = match self.tok().clone() {
            Tok::Op("*") => {
                self.bump();
                let name = self.ident()?;
                if name.name == "_" {
                    PatternKind::Star(None)
                } else {
                    PatternKind::Star(Some(name))
                }
            }
            Tok::Op("(") => {
                self.bump();
                if self.eat_op(")") {
                    PatternKind::Sequence { items: Vec::new(), bracket: Some('(') }
                } else {
                    let first = self.as_pattern()?;
                    if self.eat_op(")") {
                        PatternKind::Group(Box::new(first))
                    } else {
                        let mut items = vec![first];
                        while self.eat_op(",") {
                            if self.at_op(")") {
                                break;
                            }
                            items.push(self.as_pattern()?);
                        }
                        self.expect_op(")")?;
                        PatternKind::Sequence { items, bracket: Some('(') }
                    }
                }
            }
            Tok::Op("[") => {
                self.bump();
                let mut items = Vec::new();
                while !self.at_op("]") {
                    items.push(self.as_pattern()?);
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("]")?;
                PatternKind::Sequence { items, bracket: Some('[') }
            }
            Tok::Op("{") => {
                self.bump();
                let mut items = Vec::new();
                let mut rest = None;
                while !self.at_op("}") {
                    if self.eat_op("**") {
                        rest = Some(self.ident()?);
                    } else {
                        let key = self.sum()?;
                        self.expect_op(":")?;
                        let p = self.as_pattern()?;
                        items.push((key, p));
                    }
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("}")?;
                PatternKind::Mapping { items, rest }
            }
            Tok::Name(n) if !is_keyword(&n) => {
                if n == "_" && !self.at_op_n(1, ".") && !self.at_op_n(1, "(") {
                    self.bump();
                    PatternKind::Wildcard
                } else if self.at_op_n(1, ".") || self.at_op_n(1, "(") {
                    let mut e = {
                        let id = self.ident()?;
                        let span = id.span;
                        Expr::new(ExprKind::Name(id), span)
                    };
                    while self.eat_op(".") {
                        let attr = self.ident()?;
                        e = self.mk(
                            ExprKind::Attribute {
                                value: Box::new(e),
                                attr,
                            },
                            start,
                        );
                    }
                    if self.eat_op("(") {
                        let mut args = Vec::new();
                        let mut kwargs = Vec::new();
                        while !self.at_op(")") {
                            if matches!(self.tok(), Tok::Name(_)) && self.at_op_n(1, "=") {
                                let name = self.ident()?;
                                self.bump();
                                kwargs.push((name, self.as_pattern()?));
                            } else {
                                args.push(self.as_pattern()?);
                            }
                            if !self.eat_op(",") {
                                break;
                            }
                        }
                        self.expect_op(")")?;
                        PatternKind::Class { cls: e, args, kwargs }
                    } else {
                        PatternKind::Value(e)
                    }
                } else {
                    PatternKind::Capture(self.ident()?)
                }
            }
            _ => PatternKind::Value(self.sum()?),
        };
        Ok(Pattern {
            kind,
            span: self.sp(start),
        })
    }
}

/// Parses literal text and replacement fields of an f-string body from
/// `raw[*pos..end]`. `abs_base` is the absolute offset of `raw` in the source.
fn fstring_pieces(
    raw: &str,
    pos: &mut usize,
    end: usize,
    abs_base: usize,
    in_spec: bool,
    is_raw: bool,
    src: &str,
) -> Result<Vec<FPiece>, SyntaxError> {
    let bytes = raw.as_bytes();
    let mut pieces = Vec::new();
    let mut lit = String::new();
    while *pos < end {
        let c = bytes[*pos];
        if c == b'\\' && !is_raw {
            // Escapes are literal text; `\N{NAME}` braces are not fields.
            let named = bytes.get(*pos + 1) == Some(&b'N') && bytes.get(*pos + 2) == Some(&b'{');
            let stop = if named {
                raw[*pos..end].find('}').map(|i| *pos + i + 1).unwrap_or(end)
            } else {
                (*pos + 1 + raw[*pos + 1..].chars().next().map_or(0, |ch| ch.len_utf8())).min(end)
            };
            lit.push_str(&raw[*pos..stop]);
            *pos = stop;
            continue;
        }
        if c == b'{' {
            if !in_spec && bytes.get(*pos + 1) == Some(&b'{') {
                lit.push_str("{{");
                *pos += 2;
                continue;
            }
            if !lit.is_empty() {
                pieces.push(FPiece::Literal(std::mem::take(&mut lit)));
            }
            *pos += 1;
            pieces.push(FPiece::Field(Box::new(fstring_field(raw, pos, end, abs_base, is_raw, src)?)));
        } else if c == b'}' {
            if in_spec {
                break;
            }
            if bytes.get(*pos + 1) == Some(&b'}') {
                lit.push_str("}}");
                *pos += 2;
                continue;
            }
            return Err(error_at(src, abs_base + *pos, "f-string: single '}' is not allowed"));
        } else {
            let ch = raw[*pos..].chars().next().unwrap();
            lit.push(ch);
            *pos += ch.len_utf8();
        }
    }
    if !lit.is_empty() {
        pieces.push(FPiece::Literal(lit));
    }
    Ok(pieces)
}

fn fstring_field(
    raw: &str,
    pos: &mut usize,
    end: usize,
    abs_base: usize,
    is_raw: bool,
    src: &str,
) -> Result<FField, SyntaxError> {
    let bytes = raw.as_bytes();
    let expr_start = *pos;
    let mut depth = 0i32;
    let mut i = *pos;
    let mut debug_end = None;
    let expr_end;
    loop {
        if i >= end {
            return Err(error_at(src, abs_base + expr_start, "f-string: expecting '}'"));
        }
        let c = bytes[i];
        match c {
            b'\'' | b'"' => {
                // Nested string literal inside the expression.
                let triple = bytes.get(i + 1) == Some(&c) && bytes.get(i + 2) == Some(&c);
                let mut j = i + if triple { 3 } else { 1 };
                loop {
                    if j >= end {
                        return Err(error_at(src, abs_base + i, "f-string: unterminated string"));
                    }
                    if bytes[j] == b'\\' {
                        j += 2;
                        continue;
                    }
                    if bytes[j] == c && (!triple || (bytes.get(j + 1) == Some(&c) && bytes.get(j + 2) == Some(&c))) {
                        j += if triple { 3 } else { 1 };
                        break;
                    }
                    j += 1;
                }
                i = j;
                continue;
            }
            b'(' | b'[' | b'{' => depth += 1,
            b')' | b']' => depth -= 1,
            b'}' if depth > 0 => depth -= 1,
            b'}' | b':' if depth == 0 => {
                expr_end = i;
                break;
            }
            b'!' if depth == 0 && bytes.get(i + 1) != Some(&b'=') => {
                expr_end = i;
                break;
            }
            b'=' if depth == 0 => {
                let prev = if i > expr_start { bytes[i - 1] } else { b' ' };
                let next = bytes.get(i + 1).copied().unwrap_or(b'}');
                if next == b'=' {
                    i += 2;
                    continue;
                }
                if !matches!(prev, b'=' | b'!' | b'<' | b'>') {
                    let mut j = i + 1;
                    while j < end && bytes[j] == b' ' {
                        j += 1;
                    }
                    if j < end && matches!(bytes[j], b'}' | b'!' | b':') {
                        debug_end = Some(j);
                        expr_end = i;
                        break;
                    }
                }
            }
            _ => {}
        }
        i += 1;
    }
    let expr_text = &raw[expr_start..expr_end];
    if expr_text.trim().is_empty() {
        return Err(error_at(src, abs_base + expr_start, "f-string: empty expression not allowed"));
    }
    let mut expr = parse_expression(expr_text).map_err(|mut e| {
        let (line, col) = super::lexer::line_col(src, abs_base + expr_start);
        e.line = line + e.line - 1;
        e.column = col;
        e
    })?;
    expr = shift_expr(expr, (abs_base + expr_start) as isize);
    let mut debug_text = None;
    let mut k = expr_end;
    if let Some(de) = debug_end {
        debug_text = Some(raw[expr_start..de].to_string());
        k = de;
    }
    let mut conversion = None;
    if bytes.get(k) == Some(&b'!') {
        let conv = raw[k + 1..].chars().next().unwrap_or(' ');
        if !matches!(conv, 'r' | 's' | 'a') {
            return Err(error_at(src, abs_base + k, "f-string: invalid conversion character"));
        }
        conversion = Some(conv);
        k += 2;
    }
    let mut format_spec = None;
    if bytes.get(k) == Some(&b':') {
        k += 1;
        let mut p = k;
        let spec = fstring_pieces(raw, &mut p, end, abs_base, true, is_raw, src)?;
        format_spec = Some(spec);
        k = p;
    }
    if bytes.get(k) != Some(&b'}') {
        return Err(error_at(src, abs_base + k, "f-string: expecting '}'"));
    }
    *pos = k + 1;
    Ok(FField {
        expr,
        debug_text,
        conversion,
        format_spec,
    })
}

fn number_value(text: &str) -> NumberValue {
    let clean: String = text.chars().filter(|c| *c != '_').collect();
    let lower = clean.to_ascii_lowercase();
    if lower.ends_with('j') {
        return NumberValue::Imaginary;
    }
    let parsed = if let Some(h) = lower.strip_prefix("0x") {
        u128::from_str_radix(h, 16).ok()
    } else if let Some(o) = lower.strip_prefix("0o") {
        u128::from_str_radix(o, 8).ok()
    } else if let Some(b) = lower.strip_prefix("0b") {
        u128::from_str_radix(b, 2).ok()
    } else if lower.contains('.') || lower.contains('e') {
        return NumberValue::Float;
    } else {
        lower.parse::<u128>().ok()
    };
    NumberValue::Int(parsed)
}

// ---- span shifting (used for sub-parsed f-string fields) ----

fn sh(s: Span, d: isize) -> Span {
    Span::new((s.start as isize + d) as usize, (s.end as isize + d) as usize)
}

fn shift_ident(mut id: Ident, d: isize) -> Ident {
    id.span = sh(id.span, d);
    id
}

fn shift_box(e: Box<Expr>, d: isize) -> Box<Expr> {
    Box::new(shift_expr(*e, d))
}

fn shift_opt(e: Option<Box<Expr>>, d: isize) -> Option<Box<Expr>> {
    e.map(|e| shift_box(e, d))
}

fn shift_vec(v: Vec<Expr>, d: isize) -> Vec<Expr> {
    v.into_iter().map(|e| shift_expr(e, d)).collect()
}

fn shift_params(p: Params, d: isize) -> Params {
    Params {
        items: p
            .items
            .into_iter()
            .map(|it| match it {
                ParamItem::Param(p) => ParamItem::Param(Param {
                    name: shift_ident(p.name, d),
                    kind: p.kind,
                    annotation: p.annotation.map(|e| shift_expr(e, d)),
                    default: p.default.map(|e| shift_expr(e, d)),
                }),
                other => other,
            })
            .collect(),
    }
}

fn shift_comps(gens: Vec<Comprehension>, d: isize) -> Vec<Comprehension> {
    gens.into_iter()
        .map(|g| Comprehension {
            target: shift_expr(g.target, d),
            iter: shift_expr(g.iter, d),
            ifs: shift_vec(g.ifs, d),
            is_async: g.is_async,
        })
        .collect()
}

fn shift_pieces(pieces: Vec<FPiece>, d: isize) -> Vec<FPiece> {
    pieces
        .into_iter()
        .map(|p| match p {
            FPiece::Literal(s) => FPiece::Literal(s),
            FPiece::Field(f) => FPiece::Field(Box::new(FField {
                expr: shift_expr(f.expr, d),
                debug_text: f.debug_text,
                conversion: f.conversion,
                format_spec: f.format_spec.map(|s| shift_pieces(s, d)),
            })),
        })
        .collect()
}

pub(crate) fn shift_expr(e: Expr, d: isize) -> Expr {
    if d == 0 {
        return e;
    }
    use ExprKind as K;
    let span = sh(e.span, d);
    let kind = match e.kind {
        K::Name(id) => K::Name(shift_ident(id, d)),
        K::Strings(parts) => K::Strings(
            parts
                .into_iter()
                .map(|p| match p {
                    StrPart::Plain { raw, span } => StrPart::Plain { raw, span: sh(span, d) },
                    StrPart::FString(f) => StrPart::FString(FString {
                        prefix: f.prefix,
                        quote: f.quote,
                        pieces: shift_pieces(f.pieces, d),
                        span: sh(f.span, d),
                    }),
                })
                .collect(),
        ),
        K::BoolOp { op, values } => K::BoolOp { op, values: shift_vec(values, d) },
        K::NamedExpr { target, value } => K::NamedExpr {
            target: shift_ident(target, d),
            value: shift_box(value, d),
        },
        K::BinOp { left, op, right } => K::BinOp {
            left: shift_box(left, d),
            op,
            right: shift_box(right, d),
        },
        K::UnaryOp { op, operand } => K::UnaryOp { op, operand: shift_box(operand, d) },
        K::Lambda { params, body } => K::Lambda {
            params: shift_params(params, d),
            body: shift_box(body, d),
        },
        K::IfExp { test, body, orelse } => K::IfExp {
            test: shift_box(test, d),
            body: shift_box(body, d),
            orelse: shift_box(orelse, d),
        },
        K::Dict(items) => K::Dict(
            items
                .into_iter()
                .map(|it| match it {
                    DictItem::Pair(k, v) => DictItem::Pair(shift_expr(k, d), shift_expr(v, d)),
                    DictItem::Unpack(e) => DictItem::Unpack(shift_expr(e, d)),
                })
                .collect(),
        ),
        K::Set(v) => K::Set(shift_vec(v, d)),
        K::List(v) => K::List(shift_vec(v, d)),
        K::Tuple { elts, parenthesized } => K::Tuple {
            elts: shift_vec(elts, d),
            parenthesized,
        },
        K::ListComp { elt, generators } => K::ListComp {
            elt: shift_box(elt, d),
            generators: shift_comps(generators, d),
        },
        K::SetComp { elt, generators } => K::SetComp {
            elt: shift_box(elt, d),
            generators: shift_comps(generators, d),
        },
        K::DictComp { key, value, generators } => K::DictComp {
            key: shift_box(key, d),
            value: shift_box(value, d),
            generators: shift_comps(generators, d),
        },
        K::GeneratorExp { elt, generators, bare } => K::GeneratorExp {
            elt: shift_box(elt, d),
            generators: shift_comps(generators, d),
            bare,
        },
        K::Await(e) => K::Await(shift_box(e, d)),
        K::Yield(e) => K::Yield(shift_opt(e, d)),
        K::YieldFrom(e) => K::YieldFrom(shift_box(e, d)),
        K::Compare { left, ops, comparators } => K::Compare {
            left: shift_box(left, d),
            ops,
            comparators: shift_vec(comparators, d),
        },
        K::Call { func, args } => K::Call {
            func: shift_box(func, d),
            args: args
                .into_iter()
                .map(|a| match a {
                    Arg::Positional(e) => Arg::Positional(shift_expr(e, d)),
                    Arg::Starred(e) => Arg::Starred(shift_expr(e, d)),
                    Arg::DoubleStarred(e) => Arg::DoubleStarred(shift_expr(e, d)),
                    Arg::Keyword { name, value } => Arg::Keyword {
                        name: shift_ident(name, d),
                        value: shift_expr(value, d),
                    },
                })
                .collect(),
        },
        K::Attribute { value, attr } => K::Attribute {
            value: shift_box(value, d),
            attr: shift_ident(attr, d),
        },
        K::Subscript { value, slice } => K::Subscript {
            value: shift_box(value, d),
            slice: shift_box(slice, d),
        },
        K::Slice { lower, upper, step } => K::Slice {
            lower: shift_opt(lower, d),
            upper: shift_opt(upper, d),
            step: shift_opt(step, d),
        },
        K::Starred(e) => K::Starred(shift_box(e, d)),
        K::DoubleStarred(e) => K::DoubleStarred(shift_box(e, d)),
        K::Paren(e) => K::Paren(shift_box(e, d)),
        other @ (K::Number(_) | K::True | K::False | K::None | K::Ellipsis) => other,
    };
    Expr { kind, span }
}
