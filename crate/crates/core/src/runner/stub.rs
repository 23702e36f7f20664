//! An in-memory runner that understands a handful of trivial programs and
//! evaluates literals itself. It lets the library be exercised without a
//! worker process; anything it does not recognise is answered with
//! `protocol_error`.

use super::{literal_repr, RunMode, RunRequest, RunResponse, RunStatus, Runner, RunnerError};
use crate::syntax::ast::{ExprKind, StmtKind};
use crate::syntax::{parse, render};

const INCREMENT: &str = "def f(x):\n    return x + 1\n";
const ECHO: &str = "print(input())\n";

#[derive(Debug, Default, Clone, Copy)]
pub struct StubRunner;

impl StubRunner {
    pub fn new() -> Self {
        StubRunner
    }
}

fn unsupported(id: &str, what: &str) -> RunResponse {
    RunResponse::failure(id, RunStatus::ProtocolError, "Unsupported", format!("stub runner cannot {what}"))
}

fn loops_forever(code: &str) -> bool {
    let Ok(tree) = parse(code) else { return false };
    let mut found = false;
    crate::syntax::visit::walk_stmts(&tree.body, &mut |s| {
        if let StmtKind::While { test, body, orelse } = &s.kind {
            let pass_only = body.iter().all(|b| matches!(b.kind, StmtKind::Pass));
            if matches!(test.kind, ExprKind::True) && pass_only && orelse.is_empty() {
                found = true;
            }
        }
    });
    found
}

fn canonical(code: &str) -> Option<String> {
    parse(code).ok().map(|t| render(&t))
}

impl Runner for StubRunner {
    fn run(&self, req: &RunRequest) -> Result<RunResponse, RunnerError> {
        let id = req.id.as_str();
        if let Err(e) = req.validate() {
            return Ok(RunResponse::failure(id, RunStatus::ProtocolError, "BadRequest", e));
        }
        if req.mode != RunMode::EvalLiteral && loops_forever(&req.code) {
            return Ok(RunResponse::timeout(id, req.timeout_ms));
        }
        let canon = canonical(&req.code);
        Ok(match req.mode {
            RunMode::EvalLiteral => match literal_repr(&req.code) {
                Ok(v) => RunResponse::ok_value(id, v),
                Err(e) => RunResponse::failure(id, RunStatus::Exception, "ValueError", e.to_string()),
            },
            RunMode::CallFunction if canon.as_deref() == Some(INCREMENT) && req.function.as_deref() == Some("f") => {
                let args = req.args_repr.as_deref().unwrap_or("()");
                let arg = args.trim().trim_start_matches('(').trim_end_matches(')').trim_end_matches(',').trim();
                match literal_repr(arg).ok().and_then(|v| v.parse::<i128>().ok()) {
                    Some(n) => RunResponse::ok_value(id, (n + 1).to_string()),
                    None => unsupported(id, "add 1 to a non-integer"),
                }
            }
            RunMode::RunStdin if canon.as_deref() == Some(ECHO) => {
                let stdin = req.stdin.as_deref().unwrap_or("");
                match stdin.split_inclusive('\n').next() {
                    Some(line) => RunResponse::ok_stdout(id, format!("{}\n", line.trim_end_matches(['\n', '\r']))),
                    None => RunResponse::failure(id, RunStatus::Exception, "EOFError", "EOF when reading a line"),
                }
            }
            _ => unsupported(id, "execute this program"),
        })
    }

    fn describe(&self) -> String {
        "stub".into()
    }
}
