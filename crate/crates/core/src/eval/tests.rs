use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Duration;

use proptest::prelude::*;

use super::*;
use crate::dataset::parse_cases;
use crate::exec::Exec;
use crate::runner::StubRunner;

const FIG1: &str = r#"{"id":"fig1","code":"def f(lists):\n    lists[1].clear()\n    lists[2] += [1, 2]\n    return lists[0]\n","input":"[[395, 666, 7, 4], [], [4223, 111]]","output":"[395, 666, 7, 4]"}"#;

fn fig1() -> TestCase {
    parse_cases(FIG1, "cruxeval").unwrap().cases.remove(0)
}

fn rec(case: &str, correct: bool) -> GradeRecord {
    GradeRecord {
        case_id: case.into(),
        mutation: ORIGINAL.into(),
        sample_index: 0,
        raw_completion: String::new(),
        extracted: None,
        correct,
        failure_reason: if correct {
            FailureReason::None
        } else {
            FailureReason::Mismatch
        },
        error: None,
    }
}

#[test]
fn output_prediction_prompt() {
    let p = build_prompt(&fig1());
    assert!(p.starts_with("Based on the given Python code, which may contain errors,"));
    assert!(p.contains("Output ``# done'' after the assertion.\n\ndef f(lists):\n"));
    assert!(p.ends_with("    return lists[0]\nassert f([[395, 666, 7, 4], [], [4223, 111]]) =="));
}

#[test]
fn translation_prompt() {
    let line = r#"{"id":"t","task":"translation","code":"print(input())\n","tests":[{"stdin":"a","stdout":"a"}]}"#;
    let c = parse_cases(line, "avatar").unwrap().cases.remove(0);
    assert_eq!(
        build_prompt(&c),
        "You are a code translation expert. Translate the Python code below to Java. Do NOT output any extra information.\n\nprint(input())"
    );
}

#[test]
fn prompt_embeds_mutant() {
    let m = fig1().with_program("def f(var1):\n    return var1[0]\n");
    assert!(build_prompt(&m).contains("def f(var1):"));
}

#[test]
fn pass_at_1_examples() {
    // Case a: 1/2, case b: 1/1, case c: 0/1 -> (0.5 + 1 + 0) / 3.
    let r = vec![rec("a", true), rec("a", false), rec("b", true), rec("c", false)];
    assert!((pass_at_1(&r).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(pass_at_1(&[]), Err(EvalError::Empty));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pass_at_1_matches_brute_force(grid in prop::collection::vec(prop::collection::vec(any::<bool>(), 1..6), 1..12)) {
        let mut records = Vec::new();
        for (i, samples) in grid.iter().enumerate() {
            for (s, &ok) in samples.iter().enumerate() {
                let mut r = rec(&format!("c{i}"), ok);
                r.sample_index = s;
                records.push(r);
            }
        }
        // Shuffle-invariant: reverse the order.
        records.reverse();
        let oracle: f64 = grid
            .iter()
            .map(|s| s.iter().filter(|&&b| b).count() as f64 / s.len() as f64)
            .sum::<f64>()
            / grid.len() as f64;
        let got = pass_at_1(&records).unwrap();
        prop_assert!((got - oracle).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&got));
    }
}

#[test]
fn endpoints_file_forms() {
    let one = r#"{"base_url":"http://localhost:1/v1","model_name":"m"}"#;
    let eps = ModelEndpoint::load_all(one).unwrap();
    assert_eq!(eps[0].max_tokens, 1024);
    let wrapped = format!(r#"{{"endpoints":[{one},{one}]}}"#);
    assert_eq!(ModelEndpoint::load_all(&wrapped).unwrap().len(), 2);
    assert!(ModelEndpoint::load_all(r#"[{"base_url":"ftp://x","model_name":"m"}]"#).is_err());
    assert!(ModelEndpoint::load_all("[]").is_err());
}

/// Answers every prompt with the argument of the last `assert` line plus
/// one, which is right for `f(x) = x + 1` on input 1 only.
struct Scripted {
    answer: String,
    calls: AtomicUsize,
}

impl CompletionClient for Scripted {
    fn complete(&self, _prompt: &str, _t: f64) -> Result<String, CompletionError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(self.answer.clone())
    }
    fn model_name(&self) -> &str {
        "scripted"
    }
}

#[test]
fn evaluate_and_summarize() {
    let text = [
        r#"{"id":"a","code":"def f(x): return x + 1","input":"1","output":"2"}"#,
        r#"{"id":"b","code":"def f(x): return x + 1","input":"5","output":"6"}"#,
    ]
    .join("\n");
    let cases = parse_cases(&text, "cruxeval").unwrap().cases;
    let client = Scripted {
        answer: "assert f(1) == 2 # done".into(),
        calls: AtomicUsize::new(0),
    };
    let mut items: Vec<EvalItem> = cases
        .iter()
        .map(|c| EvalItem {
            original: c,
            shown: c.clone(),
            mutation: ORIGINAL.into(),
        })
        .collect();
    items.push(EvalItem {
        original: &cases[0],
        shown: cases[0].with_program("def f(var1): return var1 + 1"),
        mutation: "varnorm-i".into(),
    });
    let opts = EvalOptions {
        plan: SamplingPlan {
            n_samples: 3,
            temperature: 0.2,
            concurrency_limit: 2,
        },
        retry: RetryPolicy {
            attempts: 1,
            base_delay: Duration::from_millis(1),
        },
        timeout_ms: 1000,
        translation: None,
        exec: Exec::Sequential,
    };
    let stop = AtomicBool::new(false);
    let out = evaluate(&client, None, &StubRunner, &items, &opts, &stop).unwrap();
    assert_eq!(out.records.len(), 9);
    assert_eq!(out.requests, 9);
    assert!(!out.cancelled);
    let s = summarize(
        "cruxeval",
        "scripted",
        "varnorm-i",
        2,
        &out,
        3,
        vec!["a".into()],
        None,
        "stub",
    );
    assert_eq!(s.origin_full, Some(0.5));
    assert_eq!(s.applied.origin, Some(1.0));
    assert_eq!(s.applied.mutated, Some(1.0));
    assert_eq!(s.failure_counts.get("mismatch"), Some(&3));
    assert!(!s.failure_counts.contains_key("none"));

    // Parallel execution yields the same grades.
    let par = evaluate(&client, None, &StubRunner, &items, &EvalOptions { exec: Exec::Parallel, ..opts }, &stop).unwrap();
    assert_eq!(par.records, out.records);
}

#[test]
fn translation_requires_command() {
    let line = r#"{"id":"t","task":"translation","code":"print(input())\n","tests":[{"stdin":"a","stdout":"a"}]}"#;
    let cases = parse_cases(line, "avatar").unwrap().cases;
    let items = vec![EvalItem {
        original: &cases[0],
        shown: cases[0].clone(),
        mutation: ORIGINAL.into(),
    }];
    let client = Scripted {
        answer: String::new(),
        calls: AtomicUsize::new(0),
    };
    let err = evaluate(&client, None, &StubRunner, &items, &EvalOptions::default(), &AtomicBool::new(false));
    assert!(matches!(err, Err(EvalError::Config(_))));
}
