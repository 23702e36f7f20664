//! The `mutabench` binary end to end: exit codes, reproducibility, fault
//! injection and the eval -> report pipeline against a scripted endpoint.

mod common;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{fixture_runner, pinned_subset, MockServer};

fn mutabench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mutabench"))
        .args(args)
        .env_remove("MUTABENCH_RUNNER_PATH")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"{"id": "s/0", "code": "def f(x):\n    return x * 3 + 7\n", "input": "5", "output": "22"}
{"id": "s/1", "code": "def f(nums):\n    count = 0\n    for n in nums:\n        if n % 2 == 0:\n            count += 1\n    return count\n", "input": "[1, 2, 3, 4, 6, 9]", "output": "3"}
{"id": "s/2", "code": "def f(text, sep):\n    parts = text.split(sep)\n    return sep.join(reversed(parts))\n", "input": "'a-b-c-d', '-'", "output": "'d-c-b-a'"}
"#;

fn small_dataset(dir: &Path) -> PathBuf {
    let p = dir.join("small.jsonl");
    std::fs::write(&p, SMALL).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&mutabench(&[])), 2);
    assert_eq!(code(&mutabench(&["frobnicate"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out = dir.path().join("out");
    let bad_op = mutabench(&["mutate", "--dataset", s(&data), "--benchmark", "cruxeval", "--ops", "nope", "-o", s(&out)]);
    assert_eq!(code(&bad_op), 2);
    let bad_bench = mutabench(&["count", "--dataset", s(&data), "--benchmark", "humaneval"]);
    assert_eq!(code(&bad_bench), 2);
}

#[test]
fn operational_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let o = mutabench(&["count", "--dataset", s(&missing), "--benchmark", "cruxeval"]);
    assert_eq!(code(&o), 1);
    // No runner configured.
    let data = small_dataset(dir.path());
    let out = dir.path().join("out");
    assert_eq!(
        code(&mutabench(&["mutate", "--dataset", s(&data), "--benchmark", "cruxeval", "--ops", "constunfold", "-o", s(&out)])),
        0
    );
    let v = mutabench(&["verify", "--original", s(&data), "--mutated", s(&out.join("constunfold.jsonl"))]);
    assert_eq!(code(&v), 1);
}

#[test]
fn mutate_writes_manifest_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = pinned_subset();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = mutabench(&[
            "mutate", "--dataset", s(&data), "--benchmark", "cruxeval", "--ops", "varnorm2,constunfold,fuv,auv", "--seed",
            "42", "-o", s(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("manifest.json").exists());
    }
    let mut compared = 0;
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        if name == "manifest.json" {
            continue;
        }
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name:?}");
        compared += 1;
    }
    assert_eq!(compared, 8);
    // Sequential and parallel executors agree byte for byte.
    let c = dir.path().join("c");
    let o = mutabench(&[
        "--sequential", "mutate", "--dataset", s(&data), "--benchmark", "cruxeval", "--ops", "fuv", "--seed", "42", "-o",
        s(&c),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(a.join("fuv.jsonl")).unwrap(), std::fs::read(c.join("fuv.jsonl")).unwrap());
    // A different seed gives different random names.
    let d = dir.path().join("d");
    mutabench(&["mutate", "--dataset", s(&data), "--benchmark", "cruxeval", "--ops", "varnorm2", "--seed", "7", "-o", s(&d)]);
    assert_ne!(std::fs::read(a.join("varnorm2.jsonl")).unwrap(), std::fs::read(d.join("varnorm2.jsonl")).unwrap());
}

#[test]
fn verify_passes_genuine_mutants_and_flags_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out = dir.path().join("out");
    let o = mutabench(&["mutate", "--dataset", s(&data), "--benchmark", "cruxeval", "--ops", "constunfold", "--seed", "1", "-o", s(&out)]);
    assert_eq!(code(&o), 0);
    let mutated = out.join("constunfold.jsonl");
    let runner = fixture_runner();
    let ok = mutabench(&["verify", "--original", s(&data), "--mutated", s(&mutated), "--runner", s(&runner)]);
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));
    assert!(stdout(&ok).contains("mismatch 0"));

    // Fault injection: unfold 7 into an expression of the wrong value.
    let text = std::fs::read_to_string(&mutated).unwrap();
    let mut lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    lines[0]["code"] = "def f(x):\n    return x * (4 - 1) + (9 - 1)\n".into();
    lines[0]["applied"] = true.into();
    let faulty: String = lines.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(&mutated, faulty).unwrap();
    let report = dir.path().join("verify.json");
    let bad = mutabench(&[
        "verify", "--original", s(&data), "--mutated", s(&mutated), "--runner", s(&runner), "--timeout-ms", "10000",
        "--report", s(&report),
    ]);
    assert_eq!(code(&bad), 3);
    let out = stdout(&bad);
    assert!(out.contains("MISMATCH\ts/0\tconstunfold\toriginal=22\tmutated=23"), "{out}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["mismatch"], 1);
}

#[test]
fn count_census() {
    let o = mutabench(&["count", "--dataset", s(&pinned_subset()), "--benchmark", "cruxeval", "--json"]);
    assert_eq!(code(&o), 0);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 5);
    assert!(rows.as_array().unwrap().iter().all(|r| r["total"] == 100));
}

/// Answers with the dataset output for the prompt's input, so every sample
/// is correct.
fn oracle_server(dataset: &str) -> MockServer {
    let answers: HashMap<String, String> = dataset
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .map(|v| (v["input"].as_str().unwrap().to_string(), v["output"].as_str().unwrap().to_string()))
        .collect();
    MockServer::start(move |prompt, _| {
        let last = prompt.lines().last().unwrap_or_default();
        let input = last.trim_start_matches("assert f(").trim_end_matches(") ==");
        match answers.get(input) {
            Some(out) => (200, format!("{last} {out} # done")),
            None => (200, "no idea".into()),
        }
    })
}

#[test]
fn eval_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out = dir.path().join("out");
    let runner = fixture_runner();
    assert_eq!(
        code(&mutabench(&["mutate", "--dataset", s(&data), "--benchmark", "cruxeval", "--ops", "fuv", "--seed", "3", "-o", s(&out)])),
        0
    );
    let server = oracle_server(SMALL);
    let endpoints = dir.path().join("endpoints.json");
    std::fs::write(&endpoints, server.endpoint_json("oracle/model")).unwrap();
    let fuv = out.join("fuv.jsonl");
    let args = [
        "eval", "--dataset", s(&fuv), "--endpoint", s(&endpoints), "--samples", "5", "--temperature",
        "0.2", "--runner", s(&runner), "--retry-base-ms", "1",
    ];
    let o = mutabench(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // 3 original + 3 mutated prompts, 5 samples each.
    assert_eq!(server.requests(), 30);
    let summary_path = out.join("oracle_model/cruxeval-fuv.summary.json");
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary_path).unwrap()).unwrap();
    assert_eq!(summary["origin_full"], 1.0);
    assert_eq!(summary["applied"]["mutated"], 1.0);
    assert!(summary["all_applied"].is_object());

    // Re-running is served from the cache.
    assert_eq!(code(&mutabench(&args)), 0);
    assert_eq!(server.requests(), 30);

    let table = dir.path().join("table.md");
    let dist = dir.path().join("dist.csv");
    let r = mutabench(&["report", "--runs", s(&out), "-o", s(&table), "--distribution", s(&dist)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let md = std::fs::read_to_string(&table).unwrap();
    assert!(md.contains("| cruxeval | oracle/model | fuv | 3 | 100.00 | 100.00 | 100.00 | 0.00 | 0.00 |"), "{md}");
    assert!(md.contains("BLEU-4, sentence-level macro-average"));
    assert!(md.contains("| cruxeval | fuv | 3 |"));
    let csv = mutabench(&["report", "--runs", s(&out), "--format", "csv"]);
    assert!(stdout(&csv).starts_with("benchmark,model,mutation,n_cases,origin_full,origin_subset,mutated,delta_full_pp,delta_subset_pp\n"));
    let dist = std::fs::read_to_string(dist).unwrap();
    assert_eq!(dist, "benchmark,mutation,model,pass1\ncruxeval,original,oracle/model,1.0000\ncruxeval,fuv,oracle/model,1.0000\n");
}

#[test]
fn report_without_runs_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&mutabench(&["report", "--runs", s(dir.path())])), 1);
}
