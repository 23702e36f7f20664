//! A pool of worker processes speaking the runner protocol.
//!
//! Each worker handles one request at a time. A request that does not
//! answer within `timeout_ms + KILL_GRACE_MS` gets its worker killed; the
//! caller receives a `timeout` response and the slot is refilled lazily.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use super::{RunRequest, RunResponse, RunStatus, Runner, RunnerError, KILL_GRACE_MS, PROTOCOL_VERSION};

/// Environment variable naming the worker executable.
pub const RUNNER_PATH_ENV: &str = "MUTABENCH_RUNNER_PATH";

const STARTUP_TIMEOUT: Duration = Duration::from_secs(20);

/// How to start one worker process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunnerCommand {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl RunnerCommand {
    /// A `.py` path is started with `python3`; anything else is executed
    /// directly.
    pub fn for_path(path: impl AsRef<Path>) -> Self {
        let path = path.as_ref();
        if path.extension().is_some_and(|e| e == "py") {
            RunnerCommand {
                program: PathBuf::from("python3"),
                args: vec![path.to_string_lossy().into_owned()],
            }
        } else {
            RunnerCommand {
                program: path.to_path_buf(),
                args: Vec::new(),
            }
        }
    }

    /// Reads [`RUNNER_PATH_ENV`].
    pub fn from_env() -> Result<Self, RunnerError> {
        match std::env::var_os(RUNNER_PATH_ENV) {
            Some(p) if !p.is_empty() => Ok(Self::for_path(PathBuf::from(p))),
            _ => Err(RunnerError::Unavailable(format!(
                "no runner worker configured; set {RUNNER_PATH_ENV}"
            ))),
        }
    }

    fn display(&self) -> String {
        std::iter::once(self.program.to_string_lossy().into_owned())
            .chain(self.args.iter().cloned())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Worker {
    fn spawn(cmd: &RunnerCommand) -> Result<Worker, RunnerError> {
        let mut child = Command::new(&cmd.program)
            .args(&cmd.args)
            .env("PYTHONHASHSEED", "0")
            .env("PYTHONDONTWRITEBYTECODE", "1")
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| RunnerError::Unavailable(format!("cannot start `{}`: {e}", cmd.display())))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut worker = Worker { child, stdin, lines };
        let ready = match worker.lines.recv_timeout(STARTUP_TIMEOUT) {
            Ok(line) => line,
            Err(_) => {
                worker.kill();
                return Err(RunnerError::Unavailable(format!("`{}` did not announce readiness", cmd.display())));
            }
        };
        let v: serde_json::Value = serde_json::from_str(&ready)
            .map_err(|e| RunnerError::Protocol(format!("bad ready line {ready:?}: {e}")))?;
        if v["ready"] != serde_json::Value::Bool(true) || v["protocol"].as_u64() != Some(PROTOCOL_VERSION) {
            worker.kill();
            return Err(RunnerError::Protocol(format!("unsupported ready line {ready:?}")));
        }
        Ok(worker)
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        self.kill();
    }
}

enum Exchange {
    Reply(RunResponse),
    /// The worker is unusable (dead or killed); the response to report.
    Lost(Option<RunResponse>),
}

/// A bounded pool of runner worker processes.
pub struct ProcessRunner {
    command: RunnerCommand,
    size: usize,
    state: Mutex<PoolState>,
    available: Condvar,
}

struct PoolState {
    idle: Vec<Worker>,
    live: usize,
}

impl ProcessRunner {
    /// Starts one worker eagerly to surface configuration problems early;
    /// the rest are spawned on demand up to `size`.
    pub fn new(command: RunnerCommand, size: usize) -> Result<Self, RunnerError> {
        let size = size.max(1);
        let first = Worker::spawn(&command)?;
        Ok(ProcessRunner {
            command,
            size,
            state: Mutex::new(PoolState {
                idle: vec![first],
                live: 1,
            }),
            available: Condvar::new(),
        })
    }

    pub fn from_env(size: usize) -> Result<Self, RunnerError> {
        Self::new(RunnerCommand::from_env()?, size)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn acquire(&self) -> Result<Worker, RunnerError> {
        let mut state = self.state.lock().unwrap();
        loop {
            if let Some(w) = state.idle.pop() {
                return Ok(w);
            }
            if state.live < self.size {
                state.live += 1;
                drop(state);
                return Worker::spawn(&self.command).inspect_err(|_| {
                    self.state.lock().unwrap().live -= 1;
                    self.available.notify_one();
                });
            }
            state = self.available.wait(state).unwrap();
        }
    }

    fn release(&self, worker: Option<Worker>) {
        let mut state = self.state.lock().unwrap();
        match worker {
            Some(w) => state.idle.push(w),
            None => state.live -= 1,
        }
        self.available.notify_one();
    }

    fn exchange(worker: &mut Worker, req: &RunRequest, line: &str) -> Exchange {
        if writeln!(worker.stdin, "{line}").and_then(|_| worker.stdin.flush()).is_err() {
            return Exchange::Lost(None);
        }
        let deadline = Duration::from_millis(req.timeout_ms + KILL_GRACE_MS);
        match worker.lines.recv_timeout(deadline) {
            Ok(reply) => match serde_json::from_str::<RunResponse>(&reply) {
                Ok(r) if r.id == req.id => Exchange::Reply(r),
                Ok(r) => Exchange::Lost(Some(RunResponse::failure(
                    &req.id,
                    RunStatus::ProtocolError,
                    "ProtocolError",
                    format!("response id {:?} does not match request", r.id),
                ))),
                Err(e) => Exchange::Lost(Some(RunResponse::failure(
                    &req.id,
                    RunStatus::ProtocolError,
                    "ProtocolError",
                    format!("unparseable response: {e}"),
                ))),
            },
            Err(RecvTimeoutError::Timeout) => Exchange::Lost(Some(RunResponse::timeout(&req.id, req.timeout_ms))),
            Err(RecvTimeoutError::Disconnected) => Exchange::Lost(None),
        }
    }
}

impl Runner for ProcessRunner {
    fn run(&self, req: &RunRequest) -> Result<RunResponse, RunnerError> {
        let line = serde_json::to_string(req).map_err(|e| RunnerError::Protocol(e.to_string()))?;
        // A worker that dies before answering is replaced once; a second
        // crash on the same request is reported as an error.
        for attempt in 0..2 {
            let mut worker = self.acquire()?;
            match Self::exchange(&mut worker, req, &line) {
                Exchange::Reply(r) => {
                    self.release(Some(worker));
                    return Ok(r);
                }
                Exchange::Lost(response) => {
                    drop(worker);
                    self.release(None);
                    if let Some(r) = response {
                        return Ok(r);
                    }
                    log::warn!("runner worker exited during request {} (attempt {})", req.id, attempt + 1);
                }
            }
        }
        Err(RunnerError::Protocol(format!("worker crashed twice on request {}", req.id)))
    }

    fn describe(&self) -> String {
        format!("process:{} x{}", self.command.display(), self.size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_for_python_scripts() {
        let c = RunnerCommand::for_path("/x/runner.py");
        assert_eq!(c.program, PathBuf::from("python3"));
        assert_eq!(c.args, vec!["/x/runner.py".to_string()]);
        let c = RunnerCommand::for_path("/usr/bin/pyrunner");
        assert!(c.args.is_empty());
    }

    #[test]
    fn missing_executable_is_unavailable() {
        let err = ProcessRunner::new(RunnerCommand::for_path("/nonexistent/worker"), 1).err().unwrap();
        assert!(matches!(err, RunnerError::Unavailable(_)));
    }
}
