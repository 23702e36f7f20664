//! Differential execution of an original program and its mutant.
//!
//! Output-prediction cases call the function under test with the case input
//! in both programs and compare canonical value representations; raising
//! the same exception type on both sides also counts as equivalent.
//! Translation cases run both programs over every stdin vector and compare
//! whitespace-normalized stdout.

use serde::Serialize;

use crate::dataset::{TaskKind, TestCase};
use crate::exec::Exec;
use crate::runner::{RunRequest, RunResponse, RunStatus, Runner, RunnerError};
use crate::syntax::ast::{ExprKind, NumberValue};
use crate::syntax::{parse_expression, SourceUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    Equivalent,
    Mismatch,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceVerdict {
    pub status: Verdict,
    pub original_result: String,
    pub mutated_result: String,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub timeout_ms: u64,
    /// Also compare on inputs whose integer leaves are perturbed
    /// (±1, 0, sign flip).
    pub fuzz: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            timeout_ms: crate::runner::DEFAULT_TIMEOUT_MS,
            fuzz: false,
        }
    }
}

/// What one execution produced, reduced to what the comparison rule needs.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Observed {
    Value(String),
    Raised(String),
    Unknown(String),
}

impl Observed {
    fn from_response(r: &RunResponse, stdout: bool) -> Observed {
        match r.status {
            RunStatus::Ok if stdout => Observed::Value(normalize_stdout(r.stdout.as_deref().unwrap_or(""))),
            RunStatus::Ok => Observed::Value(r.value_repr.clone().unwrap_or_default()),
            RunStatus::Exception => Observed::Raised(r.error_type.clone().unwrap_or_else(|| "Exception".into())),
            RunStatus::Timeout => Observed::Unknown("timeout".into()),
            RunStatus::ProtocolError => Observed::Unknown(format!(
                "protocol error: {}",
                r.error_msg.as_deref().unwrap_or("unspecified")
            )),
        }
    }

    fn describe(&self) -> String {
        match self {
            Observed::Value(v) => v.clone(),
            Observed::Raised(t) => format!("exception:{t}"),
            Observed::Unknown(why) => format!("inconclusive:{why}"),
        }
    }
}

/// Normalizes line endings and trailing whitespace for stdout comparison.
pub fn normalize_stdout(s: &str) -> String {
    let s = s.replace("\r\n", "\n");
    let lines: Vec<&str> = s.lines().map(str::trim_end).collect();
    let mut out = lines.join("\n");
    while out.ends_with('\n') {
        out.pop();
    }
    out.trim_end().to_string()
}

fn compare(original: Observed, mutated: Observed, detail: String) -> EquivalenceVerdict {
    let status = match (&original, &mutated) {
        (Observed::Unknown(_), _) | (_, Observed::Unknown(_)) => Verdict::Inconclusive,
        (a, b) if a == b => Verdict::Equivalent,
        _ => Verdict::Mismatch,
    };
    EquivalenceVerdict {
        status,
        original_result: original.describe(),
        mutated_result: mutated.describe(),
        detail,
    }
}

fn observe_call(
    runner: &dyn Runner,
    case: &TestCase,
    code: &str,
    input: &str,
    side: &str,
    opts: VerifyOptions,
) -> Result<Observed, RunnerError> {
    let id = format!("{}:{side}", case.id);
    let r = runner.run(&RunRequest::call(id, code, &case.entry_point, input, opts.timeout_ms))?;
    Ok(Observed::from_response(&r, false))
}

fn verify_on_input(
    runner: &dyn Runner,
    case: &TestCase,
    mutant: &SourceUnit,
    input: &str,
    opts: VerifyOptions,
) -> Result<EquivalenceVerdict, RunnerError> {
    let original = observe_call(runner, case, &case.program.text, input, "orig", opts)?;
    let mutated = observe_call(runner, case, &mutant.text, input, "mut", opts)?;
    Ok(compare(original, mutated, format!("input ({input})")))
}

/// Differentially executes `case.program` and `mutant` on the case input.
pub fn verify_case(
    runner: &dyn Runner,
    case: &TestCase,
    mutant: &SourceUnit,
    opts: VerifyOptions,
) -> Result<EquivalenceVerdict, RunnerError> {
    match case.task {
        TaskKind::OutputPrediction => {
            let base = verify_on_input(runner, case, mutant, &case.input_repr, opts)?;
            if !opts.fuzz || base.status != Verdict::Equivalent {
                return Ok(base);
            }
            for input in fuzz_inputs(&case.input_repr) {
                let v = verify_on_input(runner, case, mutant, &input, opts)?;
                if v.status == Verdict::Mismatch {
                    return Ok(v);
                }
            }
            Ok(base)
        }
        TaskKind::Translation => {
            let mut first: Option<EquivalenceVerdict> = None;
            for (i, t) in case.tests.iter().enumerate() {
                let run = |code: &str, side: &str| -> Result<Observed, RunnerError> {
                    let id = format!("{}:{side}:{i}", case.id);
                    let r = runner.run(&RunRequest::program(id, code, &t.stdin, opts.timeout_ms))?;
                    Ok(Observed::from_response(&r, true))
                };
                let v = compare(
                    run(&case.program.text, "orig")?,
                    run(&mutant.text, "mut")?,
                    format!("stdin vector {i}"),
                );
                if v.status != Verdict::Equivalent {
                    return Ok(v);
                }
                first.get_or_insert(v);
            }
            Ok(first.unwrap_or_else(|| compare(Observed::Value(String::new()), Observed::Value(String::new()), "no stdin vectors".into())))
        }
    }
}

/// Variants of an argument text with one integer leaf perturbed.
pub fn fuzz_inputs(input: &str) -> Vec<String> {
    const MAX_VARIANTS: usize = 12;
    let wrapped = format!("({input},)");
    let Ok(expr) = parse_expression(&wrapped) else { return Vec::new() };
    let mut spans = Vec::new();
    crate::syntax::visit::walk_expr(&expr, &mut |e| {
        if let ExprKind::Number(n) = &e.kind {
            if let NumberValue::Int(Some(v)) = n.value {
                spans.push((e.span, v));
            }
        }
    });
    let mut out = Vec::new();
    for (span, v) in spans {
        let v = v as i128;
        for alt in [v + 1, v - 1, 0, -v] {
            if alt == v {
                continue;
            }
            let rendered = if alt < 0 { format!("({alt})") } else { alt.to_string() };
            let mut text = wrapped.clone();
            text.replace_range(span.range(), &rendered);
            let inner = text[1..text.len() - 2].to_string();
            if !out.contains(&inner) && inner != input {
                out.push(inner);
            }
            if out.len() >= MAX_VARIANTS {
                return out;
            }
        }
    }
    out
}

/// One mutant to check against its source case.
#[derive(Debug, Clone, Copy)]
pub struct VerifyItem<'a> {
    pub case: &'a TestCase,
    pub mutant: &'a str,
    pub mutation: &'a str,
    pub applied: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Offender {
    pub id: String,
    pub mutation: String,
    pub verdict: EquivalenceVerdict,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerifySummary {
    pub visited: usize,
    pub equivalent: usize,
    pub mismatch: usize,
    pub inconclusive: usize,
    /// Every non-equivalent case, mismatches first.
    pub offenders: Vec<Offender>,
}

impl VerifySummary {
    pub fn mismatches(&self) -> impl Iterator<Item = &Offender> {
        self.offenders.iter().filter(|o| o.verdict.status == Verdict::Mismatch)
    }
}

/// Verifies every applied item. Runner failures on a single item make that
/// item inconclusive; the sweep always completes.
pub fn verify_dataset(runner: &dyn Runner, items: &[VerifyItem<'_>], opts: VerifyOptions, exec: Exec) -> VerifySummary {
    let applied: Vec<&VerifyItem<'_>> = items.iter().filter(|i| i.applied).collect();
    let verdicts = exec.map(&applied, |item| {
        let mutant = SourceUnit::new(item.mutant, item.case.program.origin.clone());
        verify_case(runner, item.case, &mutant, opts).unwrap_or_else(|e| EquivalenceVerdict {
            status: Verdict::Inconclusive,
            original_result: String::new(),
            mutated_result: String::new(),
            detail: e.to_string(),
        })
    });
    let mut summary = VerifySummary {
        visited: applied.len(),
        ..VerifySummary::default()
    };
    for (item, v) in applied.iter().zip(verdicts) {
        match v.status {
            Verdict::Equivalent => summary.equivalent += 1,
            Verdict::Mismatch => summary.mismatch += 1,
            Verdict::Inconclusive => summary.inconclusive += 1,
        }
        if v.status != Verdict::Equivalent {
            summary.offenders.push(Offender {
                id: item.case.id.clone(),
                mutation: item.mutation.to_string(),
                verdict: v,
            });
        }
    }
    summary
        .offenders
        .sort_by_key(|o| (o.verdict.status != Verdict::Mismatch, o.id.clone()));
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_cases;
    use crate::runner::StubRunner;

    fn case(code: &str, input: &str) -> TestCase {
        let line = serde_json::json!({"id": "c", "code": code, "input": input, "output": "0"}).to_string();
        parse_cases(&line, "cruxeval").unwrap().cases.remove(0)
    }

    #[test]
    fn reflexive_on_stub_programs() {
        let c = case("def f(x): return x + 1", "1");
        let v = verify_case(&StubRunner, &c, &c.program, VerifyOptions::default()).unwrap();
        assert_eq!(v.status, Verdict::Equivalent);
        assert_eq!(v.original_result, "2");
    }

    #[test]
    fn timeouts_are_inconclusive() {
        let c = case("def f(x):\n    while True:\n        pass", "1");
        let v = verify_case(&StubRunner, &c, &c.program, VerifyOptions::default()).unwrap();
        assert_eq!(v.status, Verdict::Inconclusive);
    }

    #[test]
    fn comparison_rule() {
        let val = |s: &str| Observed::Value(s.into());
        let raised = |s: &str| Observed::Raised(s.into());
        assert_eq!(compare(val("1"), val("1"), String::new()).status, Verdict::Equivalent);
        assert_eq!(compare(val("1"), val("2"), String::new()).status, Verdict::Mismatch);
        assert_eq!(compare(raised("KeyError"), raised("KeyError"), String::new()).status, Verdict::Equivalent);
        assert_eq!(compare(raised("KeyError"), raised("IndexError"), String::new()).status, Verdict::Mismatch);
        assert_eq!(compare(val("1"), raised("KeyError"), String::new()).status, Verdict::Mismatch);
        let v = compare(Observed::Unknown("timeout".into()), val("1"), String::new());
        assert_eq!(v.status, Verdict::Inconclusive);
        assert_eq!(v.original_result, "inconclusive:timeout");
    }

    #[test]
    fn stdout_normalization() {
        assert_eq!(normalize_stdout("a \r\nb\n\n"), normalize_stdout("a\nb"));
        assert_ne!(normalize_stdout("a\nb"), normalize_stdout("a b"));
    }

    #[test]
    fn fuzzed_inputs_perturb_integers() {
        let v = fuzz_inputs("[3, 'x'], 2");
        assert!(v.contains(&"[4, 'x'], 2".to_string()));
        assert!(v.contains(&"[(-3), 'x'], 2".to_string()));
        assert!(v.contains(&"[3, 'x'], 0".to_string()));
        assert!(fuzz_inputs("'no ints'").is_empty());
    }

    #[test]
    fn sweep_skips_unapplied_and_never_aborts() {
        let ok = case("def f(x): return x + 1", "1");
        let odd = case("def g(y): return y", "1");
        let items = [
            VerifyItem { case: &ok, mutant: "def f(x):\n    return x + 1\n", mutation: "m", applied: true },
            VerifyItem { case: &odd, mutant: "def g(y): return y", mutation: "m", applied: true },
            VerifyItem { case: &ok, mutant: "", mutation: "m", applied: false },
        ];
        let s = verify_dataset(&StubRunner, &items, VerifyOptions::default(), Exec::Sequential);
        assert_eq!(s.visited, 2);
        assert_eq!(s.equivalent + s.mismatch + s.inconclusive, 2);
        assert_eq!(s.equivalent, 1);
        assert_eq!(s.inconclusive, 1);
        assert_eq!(s.offenders.len(), 1);
    }
}
