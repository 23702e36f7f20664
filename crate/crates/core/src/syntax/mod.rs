//! Python-3 parsing, canonical rendering and scope analysis.

pub mod ast;
pub mod lexer;
mod parser;
mod render;
pub mod visit;
pub mod scope;

use std::sync::OnceLock;

pub use ast::{Module, Span};
pub use parser::{is_keyword, parse_expression};
pub use render::{render, render_expr};
pub use scope::{analyze_scopes, analyze_scopes_excluding, BindingKind, ExclusionReason, ScopeTable};

/// Parse failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Parses Python source text into a [`Module`].
pub fn parse(text: &str) -> Result<Module, SyntaxError> {
    parser::parse_module(text)
}

/// Program text together with its lazily parsed tree.
#[derive(Debug)]
pub struct SourceUnit {
    pub text: String,
    pub origin: String,
    tree: OnceLock<Result<Module, SyntaxError>>,
}

impl Clone for SourceUnit {
    fn clone(&self) -> Self {
        let tree = OnceLock::new();
        if let Some(t) = self.tree.get() {
            let _ = tree.set(t.clone());
        }
        SourceUnit {
            text: self.text.clone(),
            origin: self.origin.clone(),
            tree,
        }
    }
}

impl SourceUnit {
    pub fn new(text: impl Into<String>, origin: impl Into<String>) -> Self {
        SourceUnit {
            text: text.into(),
            origin: origin.into(),
            tree: OnceLock::new(),
        }
    }

    /// The parsed tree; parsing happens on first access and is cached.
    pub fn tree(&self) -> Result<&Module, &SyntaxError> {
        self.tree.get_or_init(|| parse(&self.text)).as_ref()
    }
}

/// Python builtins that are never renamed and never produced as fresh names.
pub const BUILTINS: &[&str] = &[
    "abs", "aiter", "all", "anext", "any", "ascii", "bin", "bool", "breakpoint", "bytearray",
    "bytes", "callable", "chr", "classmethod", "compile", "complex", "copyright", "credits",
    "delattr", "dict", "dir", "divmod", "enumerate", "eval", "exec", "exit", "filter", "float",
    "format", "frozenset", "getattr", "globals", "hasattr", "hash", "help", "hex", "id", "input",
    "int", "isinstance", "issubclass", "iter", "len", "license", "list", "locals", "map", "max",
    "memoryview", "min", "next", "object", "oct", "open", "ord", "pow", "print", "property",
    "quit", "range", "repr", "reversed", "round", "set", "setattr", "slice", "sorted",
    "staticmethod", "str", "sum", "super", "tuple", "type", "vars", "zip", "__import__",
    "__name__", "__doc__", "__file__", "__builtins__", "__spec__", "__loader__", "__package__",
    "__debug__", "NotImplemented", "Ellipsis", "BaseException", "BaseExceptionGroup",
    "Exception", "ExceptionGroup", "ArithmeticError", "AssertionError", "AttributeError",
    "BlockingIOError", "BrokenPipeError", "BufferError", "BytesWarning", "ChildProcessError",
    "ConnectionAbortedError", "ConnectionError", "ConnectionRefusedError",
    "ConnectionResetError", "DeprecationWarning", "EOFError", "EncodingWarning",
    "EnvironmentError", "FileExistsError", "FileNotFoundError", "FloatingPointError",
    "FutureWarning", "GeneratorExit", "IOError", "ImportError", "ImportWarning",
    "IndentationError", "IndexError", "InterruptedError", "IsADirectoryError", "KeyError",
    "KeyboardInterrupt", "LookupError", "MemoryError", "ModuleNotFoundError", "NameError",
    "NotADirectoryError", "NotImplementedError", "OSError", "OverflowError",
    "PendingDeprecationWarning", "PermissionError", "ProcessLookupError", "RecursionError",
    "ReferenceError", "ResourceWarning", "RuntimeError", "RuntimeWarning",
    "StopAsyncIteration", "StopIteration", "SyntaxError", "SyntaxWarning", "SystemError",
    "SystemExit", "TabError", "TimeoutError", "TypeError", "UnboundLocalError",
    "UnicodeDecodeError", "UnicodeEncodeError", "UnicodeError", "UnicodeTranslateError",
    "UnicodeWarning", "UserWarning", "ValueError", "Warning", "ZeroDivisionError",
];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}


#[cfg(test)]
mod tests;
