//! Grading by execution: ground truth comes from running the original
//! program; predicted outputs are compared by canonical repr; translated
//! programs are run against the case's test vectors.

use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{extract_answer, CompletionError, FailureReason, GradeRecord};
use crate::dataset::{TaskKind, TestCase};
use crate::equiv::normalize_stdout;
use crate::runner::{literal_repr, RunRequest, RunStatus, Runner};

/// Expected output of an output-prediction case in canonical repr form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub repr: String,
    /// `runner` when obtained by executing the original program,
    /// `dataset` when taken from the recorded output.
    pub source: String,
}

/// Runs the original program on the case input. Falls back to the
/// dataset's recorded output when execution does not succeed, and logs any
/// disagreement between the two.
pub fn ground_truth(runner: &dyn Runner, original: &TestCase, timeout_ms: u64) -> GroundTruth {
    let recorded = literal_repr(&original.expected_repr).unwrap_or_else(|_| original.expected_repr.trim().to_string());
    if original.task != TaskKind::OutputPrediction {
        return GroundTruth {
            repr: recorded,
            source: "dataset".into(),
        };
    }
    let req = RunRequest::call(
        format!("truth/{}", original.id),
        &original.program.text,
        &original.entry_point,
        &original.input_repr,
        timeout_ms,
    );
    match runner.run(&req) {
        Ok(resp) if resp.status == RunStatus::Ok && resp.value_repr.is_some() => {
            let repr = resp.value_repr.unwrap_or_default();
            if repr != recorded {
                log::warn!(
                    "{}: executed output {repr} differs from recorded {recorded}; grading against execution",
                    original.id
                );
            }
            GroundTruth {
                repr,
                source: "runner".into(),
            }
        }
        other => {
            let why = match other {
                Ok(resp) => format!("{:?} {}", resp.status, resp.error_msg.unwrap_or_default()),
                Err(e) => e.to_string(),
            };
            log::warn!("{}: cannot execute original ({why}); using recorded output", original.id);
            GroundTruth {
                repr: recorded,
                source: "dataset".into(),
            }
        }
    }
}

/// External command that runs a translated program. `{file}` in the
/// template is replaced by the path of the written source file and `{dir}`
/// by its directory; the program reads stdin and writes stdout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationCommand {
    pub template: String,
    /// File name the translated source is written to.
    #[serde(default = "default_file_name")]
    pub file_name: String,
}

fn default_file_name() -> String {
    "Main.java".into()
}

impl TranslationCommand {
    pub fn new(template: impl Into<String>) -> Self {
        TranslationCommand {
            template: template.into(),
            file_name: default_file_name(),
        }
    }

    fn argv(&self, file: &Path) -> Vec<String> {
        let dir = file.parent().unwrap_or(Path::new("."));
        self.template
            .split_whitespace()
            .map(|w| {
                w.replace("{file}", &file.to_string_lossy())
                    .replace("{dir}", &dir.to_string_lossy())
            })
            .collect()
    }

    /// Runs the program in `file` with `stdin`, returning its stdout, or
    /// the failure reason and a message.
    fn run(&self, file: &Path, stdin: &str, timeout: Duration) -> Result<String, (FailureReason, String)> {
        let argv = self.argv(file);
        let Some((prog, args)) = argv.split_first() else {
            return Err((FailureReason::RuntimeError, "empty translation command".into()));
        };
        let mut child = Command::new(prog)
            .args(args)
            .current_dir(file.parent().unwrap_or(Path::new(".")))
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| (FailureReason::RuntimeError, format!("cannot start `{prog}`: {e}")))?;
        let mut input = child.stdin.take().expect("piped stdin");
        let stdin = stdin.to_string();
        let writer = std::thread::spawn(move || {
            let _ = input.write_all(stdin.as_bytes());
        });
        let mut out = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = out.read_to_end(&mut buf);
            buf
        });
        let mut err = child.stderr.take().expect("piped stderr");
        let err_reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = err.read_to_end(&mut buf);
            buf
        });
        let start = Instant::now();
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if start.elapsed() >= timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err((FailureReason::Timeout, format!("exceeded {} ms", timeout.as_millis())));
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(5)),
                Err(e) => return Err((FailureReason::RuntimeError, e.to_string())),
            }
        };
        let _ = writer.join();
        let stdout = String::from_utf8_lossy(&reader.join().unwrap_or_default()).into_owned();
        let stderr = String::from_utf8_lossy(&err_reader.join().unwrap_or_default()).into_owned();
        if !status.success() {
            let tail: String = stderr.lines().rev().take(3).collect::<Vec<_>>().join(" | ");
            return Err((FailureReason::RuntimeError, format!("{status}: {tail}")));
        }
        Ok(stdout)
    }
}

/// Grades one sample. `case` carries the program shown to the model;
/// `truth` is the ground truth computed from the original program.
#[allow(clippy::too_many_arguments)]
pub fn grade(
    runner: &dyn Runner,
    case: &TestCase,
    truth: &GroundTruth,
    mutation: &str,
    sample_index: usize,
    completion: &Result<String, CompletionError>,
    translation: Option<&TranslationCommand>,
    timeout_ms: u64,
) -> GradeRecord {
    let mut record = GradeRecord {
        case_id: case.id.clone(),
        mutation: mutation.to_string(),
        sample_index,
        raw_completion: String::new(),
        extracted: None,
        correct: false,
        failure_reason: FailureReason::ExtractionFailed,
        error: None,
    };
    let text = match completion {
        Ok(t) => t,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    record.raw_completion = text.clone();
    let answer = match extract_answer(case.task, text) {
        Ok(a) => a,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    record.extracted = Some(answer.clone());
    let verdict = match case.task {
        TaskKind::OutputPrediction => grade_prediction(runner, case, truth, &answer, timeout_ms),
        TaskKind::Translation => match translation {
            Some(cmd) => grade_translation(cmd, case, &answer, timeout_ms),
            None => Err((FailureReason::RuntimeError, "no translation command configured".into())),
        },
    };
    match verdict {
        Ok(()) => {
            record.correct = true;
            record.failure_reason = FailureReason::None;
        }
        Err((reason, msg)) => {
            record.failure_reason = reason;
            record.error = Some(msg);
        }
    }
    record
}

fn grade_prediction(
    runner: &dyn Runner,
    case: &TestCase,
    truth: &GroundTruth,
    answer: &str,
    timeout_ms: u64,
) -> Result<(), (FailureReason, String)> {
    // Plain literals are canonicalized in-process; anything else goes
    // through the runner's literal evaluation.
    let repr = match literal_repr(answer) {
        Ok(r) => r,
        Err(_) => {
            let req = RunRequest::literal(format!("answer/{}", case.id), answer, timeout_ms);
            match runner.run(&req) {
                Ok(resp) if resp.status == RunStatus::Ok => resp.value_repr.unwrap_or_default(),
                Ok(resp) if resp.status == RunStatus::Timeout => {
                    return Err((FailureReason::Timeout, "answer evaluation timed out".into()))
                }
                Ok(resp) => {
                    return Err((
                        FailureReason::Mismatch,
                        format!(
                            "answer is not a literal: {} {}",
                            resp.error_type.unwrap_or_default(),
                            resp.error_msg.unwrap_or_default()
                        ),
                    ))
                }
                Err(e) => return Err((FailureReason::RuntimeError, e.to_string())),
            }
        }
    };
    if repr == truth.repr {
        Ok(())
    } else {
        Err((FailureReason::Mismatch, format!("expected {}, got {repr}", truth.repr)))
    }
}

fn grade_translation(
    cmd: &TranslationCommand,
    case: &TestCase,
    code: &str,
    timeout_ms: u64,
) -> Result<(), (FailureReason, String)> {
    if case.tests.is_empty() {
        return Err((FailureReason::RuntimeError, "case has no test vectors".into()));
    }
    let dir = tempfile::tempdir().map_err(|e| (FailureReason::RuntimeError, e.to_string()))?;
    let file = dir.path().join(&cmd.file_name);
    std::fs::write(&file, code).map_err(|e| (FailureReason::RuntimeError, e.to_string()))?;
    for (i, t) in case.tests.iter().enumerate() {
        let out = cmd.run(&file, &t.stdin, Duration::from_millis(timeout_ms))?;
        if normalize_stdout(&out) != normalize_stdout(&t.stdout) {
            return Err((FailureReason::Mismatch, format!("test {i}: stdout differs")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_cases;
    use crate::runner::StubRunner;

    fn case() -> TestCase {
        let line = r#"{"id":"s/0","code":"def f(x): return x + 1","input":"1","output":"2"}"#;
        parse_cases(line, "cruxeval").unwrap().cases.remove(0)
    }

    #[test]
    fn truth_from_execution() {
        let t = ground_truth(&StubRunner, &case(), 1000);
        assert_eq!(t.repr, "2");
        assert_eq!(t.source, "runner");
    }

    #[test]
    fn prediction_outcomes() {
        let c = case();
        let truth = GroundTruth {
            repr: "2".into(),
            source: "runner".into(),
        };
        let g = |s: &str| grade(&StubRunner, &c, &truth, "original", 0, &Ok(s.into()), None, 1000);
        let ok = g("assert f(1) == 2 # done");
        assert!(ok.correct);
        assert_eq!(ok.failure_reason, FailureReason::None);
        assert_eq!(g("assert f(1) == 3").failure_reason, FailureReason::Mismatch);
        assert_eq!(g("no idea").failure_reason, FailureReason::ExtractionFailed);
        let net = grade(
            &StubRunner,
            &c,
            &truth,
            "original",
            1,
            &Err(CompletionError::Fatal("HTTP 401".into())),
            None,
            1000,
        );
        assert_eq!(net.failure_reason, FailureReason::ExtractionFailed);
        assert!(net.error.unwrap().contains("401"));
    }

    #[test]
    fn translation_via_command() {
        let line = r#"{"id":"t/0","task":"translation","code":"print(input())","tests":[{"stdin":"hi\n","stdout":"hi\n"}]}"#;
        let c = parse_cases(line, "avatar").unwrap().cases.remove(0);
        let truth = ground_truth(&StubRunner, &c, 1000);
        // `cat` echoes stdin, so a "program" graded with it passes.
        let cat = TranslationCommand::new("cat");
        let r = grade(&StubRunner, &c, &truth, "original", 0, &Ok("```\nx\n```".into()), Some(&cat), 5000);
        assert!(r.correct, "{r:?}");
        let bad = TranslationCommand::new("false {file}");
        let r = grade(&StubRunner, &c, &truth, "original", 0, &Ok("x".into()), Some(&bad), 5000);
        assert_eq!(r.failure_reason, FailureReason::RuntimeError);
        let slow = TranslationCommand::new("sleep 5");
        let r = grade(&StubRunner, &c, &truth, "original", 0, &Ok("x".into()), Some(&slow), 100);
        assert_eq!(r.failure_reason, FailureReason::Timeout);
    }
}
