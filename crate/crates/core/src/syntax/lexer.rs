//! Tokenizer for the Python-3 object language.

use super::ast::Span;
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Name(String),
    Number(String),
    /// Full string token text including prefix and quotes.
    Str(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    EndMarker,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest operators first so that greedy matching works.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|",
    "^", "~", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "=",
];

pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = match before.rfind('\n') {
        Some(nl) => before[nl + 1..].chars().count() + 1,
        None => before.chars().count() + 1,
    };
    (line, col)
}

pub fn error_at(text: &str, offset: usize, message: impl Into<String>) -> SyntaxError {
    let (line, column) = line_col(text, offset);
    SyntaxError {
        line,
        column,
        message: message.into(),
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

fn is_string_prefix(word: &str) -> bool {
    matches!(
        word.to_ascii_lowercase().as_str(),
        "r" | "u" | "b" | "f" | "br" | "rb" | "fr" | "rf"
    )
}

struct Lexer<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    depth: usize,
    indents: Vec<usize>,
    tokens: Vec<Token>,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut lx = Lexer {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        depth: 0,
        indents: vec![0],
        tokens: Vec::new(),
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl<'a> Lexer<'a> {
    fn err(&self, offset: usize, msg: &str) -> SyntaxError {
        error_at(self.text, offset, msg)
    }

    fn push(&mut self, tok: Tok, start: usize, end: usize) {
        self.tokens.push(Token {
            tok,
            span: Span::new(start, end),
        });
    }

    fn peek_char(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn run(&mut self) -> Result<(), SyntaxError> {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                if !self.handle_indentation()? {
                    break;
                }
                at_line_start = false;
            }
            let Some(c) = self.peek_char() else { break };
            match c {
                ' ' | '\t' | '\x0c' => self.pos += 1,
                '\\' => {
                    let rest = &self.text[self.pos + 1..];
                    if rest.starts_with("\r\n") {
                        self.pos += 3;
                    } else if rest.starts_with('\n') {
                        self.pos += 2;
                    } else {
                        return Err(self.err(self.pos, "unexpected character after line continuation character"));
                    }
                    if self.pos >= self.bytes.len() {
                        return Err(self.err(self.pos, "unexpected EOF after line continuation"));
                    }
                }
                '#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                '\r' | '\n' => {
                    let start = self.pos;
                    if c == '\r' && self.text[self.pos..].starts_with("\r\n") {
                        self.pos += 2;
                    } else {
                        self.pos += 1;
                    }
                    if self.depth == 0 {
                        self.push(Tok::Newline, start, start);
                        at_line_start = true;
                    }
                }
                c if is_ident_start(c) => self.lex_name_or_string()?,
                c if c.is_ascii_digit() => self.lex_number()?,
                '.' if self.bytes.get(self.pos + 1).is_some_and(|b| b.is_ascii_digit()) => {
                    self.lex_number()?
                }
                '"' | '\'' => self.lex_string(self.pos)?,
                _ => self.lex_operator()?,
            }
        }
        if self.depth > 0 {
            return Err(self.err(self.text.len(), "unexpected EOF: unclosed bracket"));
        }
        let end = self.text.len();
        if !matches!(self.tokens.last().map(|t| &t.tok), None | Some(Tok::Newline) | Some(Tok::Dedent)) {
            self.push(Tok::Newline, end, end);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, end, end);
        }
        self.push(Tok::EndMarker, end, end);
        Ok(())
    }

    /// Measures indentation at the start of a logical line, skipping blank and
    /// comment-only lines. Returns false at end of input.
    fn handle_indentation(&mut self) -> Result<bool, SyntaxError> {
        loop {
            let mut col = 0usize;
            while self.pos < self.bytes.len() {
                match self.bytes[self.pos] {
                    b' ' => col += 1,
                    b'\t' => col = (col / 8 + 1) * 8,
                    b'\x0c' => col = 0,
                    _ => break,
                }
                self.pos += 1;
            }
            if self.pos >= self.bytes.len() {
                return Ok(false);
            }
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                    if self.pos < self.bytes.len() {
                        self.pos += 1;
                    }
                    continue;
                }
                b'\n' => {
                    self.pos += 1;
                    continue;
                }
                b'\r' => {
                    self.pos += 1;
                    if self.bytes.get(self.pos) == Some(&b'\n') {
                        self.pos += 1;
                    }
                    continue;
                }
                b'\\' if matches!(self.bytes.get(self.pos + 1), Some(b'\n')) => {
                    // A continuation line that starts a logical line keeps the indentation.
                    self.pos += 2;
                }
                _ => {}
            }
            let current = *self.indents.last().unwrap();
            if col > current {
                self.indents.push(col);
                self.push(Tok::Indent, self.pos, self.pos);
            } else if col < current {
                while col < *self.indents.last().unwrap() {
                    self.indents.pop();
                    self.push(Tok::Dedent, self.pos, self.pos);
                }
                if col != *self.indents.last().unwrap() {
                    return Err(self.err(self.pos, "unindent does not match any outer indentation level"));
                }
            }
            return Ok(true);
        }
    }

    fn lex_name_or_string(&mut self) -> Result<(), SyntaxError> {
        let start = self.pos;
        let mut end = self.pos;
        for (i, c) in self.text[start..].char_indices() {
            if is_ident_continue(c) {
                end = start + i + c.len_utf8();
            } else {
                break;
            }
        }
        let word = &self.text[start..end];
        if is_string_prefix(word) && matches!(self.bytes.get(end), Some(b'"') | Some(b'\'')) {
            self.pos = end;
            return self.lex_string(start);
        }
        self.pos = end;
        self.push(Tok::Name(word.to_string()), start, end);
        Ok(())
    }

    fn lex_string(&mut self, start: usize) -> Result<(), SyntaxError> {
        let quote = self.bytes[self.pos];
        let triple = self.bytes.get(self.pos + 1) == Some(&quote) && self.bytes.get(self.pos + 2) == Some(&quote);
        let mut i = self.pos + if triple { 3 } else { 1 };
        loop {
            let Some(&b) = self.bytes.get(i) else {
                return Err(self.err(start, "unterminated string literal"));
            };
            if b == b'\\' {
                i += 2;
                continue;
            }
            if b == b'\n' && !triple {
                return Err(self.err(start, "unterminated string literal"));
            }
            if b == quote {
                if !triple {
                    i += 1;
                    break;
                }
                if self.bytes.get(i + 1) == Some(&quote) && self.bytes.get(i + 2) == Some(&quote) {
                    i += 3;
                    break;
                }
            }
            i += 1;
        }
        self.pos = i;
        self.push(Tok::Str(self.text[start..i].to_string()), start, i);
        Ok(())
    }

    fn lex_number(&mut self) -> Result<(), SyntaxError> {
        let start = self.pos;
        let b = self.bytes;
        let mut i = start;
        let digits = |i: &mut usize, pred: fn(u8) -> bool| {
            while *i < b.len() && (pred(b[*i]) || b[*i] == b'_') {
                *i += 1;
            }
        };
        if b[i] == b'0' && matches!(b.get(i + 1), Some(b'x' | b'X' | b'o' | b'O' | b'b' | b'B')) {
            let radix = b[i + 1].to_ascii_lowercase();
            i += 2;
            match radix {
                b'x' => digits(&mut i, |c| c.is_ascii_hexdigit()),
                b'o' => digits(&mut i, |c| (b'0'..=b'7').contains(&c)),
                _ => digits(&mut i, |c| c == b'0' || c == b'1'),
            }
        } else {
            digits(&mut i, |c| c.is_ascii_digit());
            if i < b.len() && b[i] == b'.' && !(b.get(i + 1) == Some(&b'.') && b.get(i + 2) == Some(&b'.')) {
                i += 1;
                digits(&mut i, |c| c.is_ascii_digit());
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    i = j;
                    digits(&mut i, |c| c.is_ascii_digit());
                }
            }
            if i < b.len() && (b[i] == b'j' || b[i] == b'J') {
                i += 1;
            }
        }
        if i < b.len() && is_ident_start(self.text[i..].chars().next().unwrap()) {
            // `1if x else 2` is legal; anything else glued to a number is not.
            let rest = &self.text[i..];
            let glued_keyword = ["if", "else", "and", "or", "in", "is", "not", "for"]
                .iter()
                .any(|kw| rest.starts_with(kw));
            if !glued_keyword {
                return Err(self.err(start, "invalid decimal literal"));
            }
        }
        self.pos = i;
        self.push(Tok::Number(self.text[start..i].to_string()), start, i);
        Ok(())
    }

    fn lex_operator(&mut self) -> Result<(), SyntaxError> {
        let rest = &self.text[self.pos..];
        for op in OPERATORS {
            if rest.starts_with(op) {
                let start = self.pos;
                self.pos += op.len();
                match *op {
                    "(" | "[" | "{" => self.depth += 1,
                    ")" | "]" | "}" => {
                        if self.depth == 0 {
                            return Err(self.err(start, &format!("unmatched '{}'", op)));
                        }
                        self.depth -= 1;
                    }
                    _ => {}
                }
                self.push(Tok::Op(op), start, self.pos);
                return Ok(());
            }
        }
        let c = self.peek_char().unwrap_or('?');
        Err(self.err(self.pos, &format!("invalid character '{}'", c)))
    }
}
