//! Execution of object-language programs through an external worker that
//! speaks a line-delimited JSON protocol on stdin/stdout.
//!
//! A worker announces `{"ready": true, "protocol": 1}` on startup and then
//! answers every request line with exactly one response line carrying the
//! same `id`.

mod literal;
mod process;
mod stub;

use serde::{Deserialize, Serialize};

pub use literal::{literal_repr, LiteralError};
pub use process::{ProcessRunner, RunnerCommand, RUNNER_PATH_ENV};
pub use stub::StubRunner;

pub const PROTOCOL_VERSION: u64 = 1;
pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;
pub const MAX_TIMEOUT_MS: u64 = 120_000;
/// Extra time granted to a worker beyond the request budget before it is
/// killed.
pub const KILL_GRACE_MS: u64 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    CallFunction,
    RunStdin,
    EvalLiteral,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRequest {
    pub id: String,
    pub mode: RunMode,
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    /// Parenthesized argument list, e.g. `([1, 2],)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub args_repr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stdin: Option<String>,
    pub timeout_ms: u64,
}

impl RunRequest {
    /// Calls `function` defined by `code` with the arguments written in
    /// `input` (the text between the call parentheses of a test driver).
    pub fn call(id: impl Into<String>, code: &str, function: &str, input: &str, timeout_ms: u64) -> Self {
        RunRequest {
            id: id.into(),
            mode: RunMode::CallFunction,
            code: code.to_string(),
            function: Some(function.to_string()),
            args_repr: Some(args_repr(input)),
            stdin: None,
            timeout_ms,
        }
    }

    pub fn program(id: impl Into<String>, code: &str, stdin: &str, timeout_ms: u64) -> Self {
        RunRequest {
            id: id.into(),
            mode: RunMode::RunStdin,
            code: code.to_string(),
            function: None,
            args_repr: None,
            stdin: Some(stdin.to_string()),
            timeout_ms,
        }
    }

    pub fn literal(id: impl Into<String>, expr: &str, timeout_ms: u64) -> Self {
        RunRequest {
            id: id.into(),
            mode: RunMode::EvalLiteral,
            code: expr.to_string(),
            function: None,
            args_repr: None,
            stdin: None,
            timeout_ms,
        }
    }

    /// Checks the mode-specific fields and the timeout range.
    pub fn validate(&self) -> Result<(), String> {
        if !(1..=MAX_TIMEOUT_MS).contains(&self.timeout_ms) {
            return Err(format!("timeout_ms must be in [1, {MAX_TIMEOUT_MS}]"));
        }
        match self.mode {
            RunMode::CallFunction if self.function.is_none() || self.args_repr.is_none() => {
                Err("call_function requires function and args_repr".into())
            }
            RunMode::RunStdin if self.stdin.is_none() => Err("run_stdin requires stdin".into()),
            _ => Ok(()),
        }
    }
}

/// Wraps a driver's argument text as a parenthesized argument list.
pub fn args_repr(input: &str) -> String {
    let trimmed = input.trim();
    if trimmed.is_empty() {
        "()".into()
    } else {
        format!("({trimmed},)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Exception,
    Timeout,
    ProtocolError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResponse {
    pub id: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_repr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stdout: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_msg: Option<String>,
}

impl RunResponse {
    pub fn ok_value(id: &str, value_repr: impl Into<String>) -> Self {
        RunResponse {
            id: id.into(),
            status: RunStatus::Ok,
            value_repr: Some(value_repr.into()),
            stdout: None,
            error_type: None,
            error_msg: None,
        }
    }

    pub fn ok_stdout(id: &str, stdout: impl Into<String>) -> Self {
        RunResponse {
            stdout: Some(stdout.into()),
            value_repr: None,
            ..RunResponse::ok_value(id, "")
        }
    }

    pub fn failure(id: &str, status: RunStatus, error_type: &str, msg: impl Into<String>) -> Self {
        RunResponse {
            id: id.into(),
            status,
            value_repr: None,
            stdout: None,
            error_type: Some(error_type.into()),
            error_msg: Some(msg.into()),
        }
    }

    pub fn timeout(id: &str, timeout_ms: u64) -> Self {
        RunResponse::failure(id, RunStatus::Timeout, "Timeout", format!("exceeded {timeout_ms} ms"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("runner unavailable: {0}")]
    Unavailable(String),
    #[error("runner I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("runner protocol violation: {0}")]
    Protocol(String),
}

/// Anything that can execute [`RunRequest`]s. Implementations are shared
/// across worker threads.
pub trait Runner: Send + Sync {
    fn run(&self, request: &RunRequest) -> Result<RunResponse, RunnerError>;

    /// Short human-readable description for run metadata.
    fn describe(&self) -> String;
}

impl<R: Runner + ?Sized> Runner for std::sync::Arc<R> {
    fn run(&self, request: &RunRequest) -> Result<RunResponse, RunnerError> {
        (**self).run(request)
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}
