//! Benchmark ingestion into a uniform case model, and emission of mutated
//! datasets.
//!
//! Case files are UTF-8 JSONL, one object per line:
//! `{"id", "benchmark", "task", "code", "input", "output", "tests"?}`.
//! Upstream CRUXEval records (`{"code", "input", "output", "id"}`) load
//! unchanged because `benchmark` and `task` default from the caller.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::exec::Exec;
use crate::mutate::{compose_with, CaseContext, MutateError, MutationConfig, MutationKind, MutationOutcome, MutationPlan};
use crate::syntax::ast::{Arg, ExprKind};
use crate::syntax::{parse_expression, SourceUnit};

pub const BENCHMARKS: [&str; 4] = ["cruxeval", "avatar", "codenet", "transcoder"];
pub const DEFAULT_ENTRY_POINT: &str = "f";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    OutputPrediction,
    Translation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestVector {
    pub stdin: String,
    pub stdout: String,
}

#[derive(Debug, Clone)]
pub struct TestCase {
    pub id: String,
    pub benchmark: String,
    pub task: TaskKind,
    pub program: SourceUnit,
    /// Argument text of the call under test, e.g. `[1, 2], 3`.
    pub input_repr: String,
    pub expected_repr: String,
    pub tests: Vec<TestVector>,
    /// Name of the function under test (output prediction).
    pub entry_point: String,
}

impl TestCase {
    /// Same case with a different program (a mutant); the expected output
    /// is carried over untouched.
    pub fn with_program(&self, text: impl Into<String>) -> TestCase {
        TestCase {
            program: SourceUnit::new(text, self.program.origin.clone()),
            ..self.clone()
        }
    }

    /// Names passed as keyword arguments by the call under test.
    pub fn context(&self) -> CaseContext {
        let mut keyword_args = Vec::new();
        if self.task == TaskKind::OutputPrediction {
            if let Ok(call) = parse_expression(&format!("{}({})", self.entry_point, self.input_repr)) {
                if let ExprKind::Call { args, .. } = &call.unparen().kind {
                    for a in args {
                        if let Arg::Keyword { name, .. } = a {
                            keyword_args.push(name.name.clone());
                        }
                    }
                }
            }
        }
        CaseContext { keyword_args }
    }
}

/// A record that could not be admitted into the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: usize,
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub cases: Vec<TestCase>,
    pub rejects: Vec<Reject>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Format { path: PathBuf, line: usize, reason: String },
}

impl DatasetError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

const CODE_ALIASES: [&str; 4] = ["code", "python_code", "source", "python"];
const TESTS_ALIASES: [&str; 2] = ["tests", "test_cases"];
const KNOWN_FIELDS: [&str; 8] = ["id", "benchmark", "task", "code", "input", "output", "tests", "entry_point"];

fn take_str(obj: &Map<String, Value>, names: &[&str], field: &str) -> Result<String, String> {
    for n in names {
        if let Some(v) = obj.get(*n) {
            return match v {
                Value::String(s) => Ok(s.clone()),
                _ => Err(format!("field `{field}` must be a string")),
            };
        }
    }
    Err(format!("missing field `{field}`"))
}

/// Loads a case file. Malformed records abort with a [`DatasetError::Format`];
/// records whose program does not parse are collected in `rejects`.
pub fn load(path: &Path, benchmark: &str) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    parse_cases(&text, benchmark).map_err(|(line, reason)| DatasetError::Format {
        path: path.to_path_buf(),
        line,
        reason,
    })
}

/// Parses JSONL case text; errors carry a 1-based line number.
pub fn parse_cases(text: &str, benchmark: &str) -> Result<Dataset, (usize, String)> {
    if !BENCHMARKS.contains(&benchmark) {
        return Err((0, format!("unknown benchmark `{benchmark}` (expected one of {})", BENCHMARKS.join(", "))));
    }
    let mut out = Dataset::default();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| (lineno, format!("invalid JSON: {e}")))?;
        let Value::Object(obj) = value else {
            return Err((lineno, "record must be a JSON object".into()));
        };
        let case = case_from_object(&obj, benchmark).map_err(|r| (lineno, r))?;
        if !seen.insert(case.id.clone()) {
            return Err((lineno, format!("duplicate id `{}`", case.id)));
        }
        if let Err(e) = case.program.tree() {
            out.rejects.push(Reject {
                line: lineno,
                id: case.id.clone(),
                reason: e.to_string(),
            });
            continue;
        }
        if case.task == TaskKind::OutputPrediction {
            if let Err(e) = parse_expression(&case.expected_repr) {
                out.rejects.push(Reject {
                    line: lineno,
                    id: case.id.clone(),
                    reason: format!("expected output is not an expression: {e}"),
                });
                continue;
            }
        }
        out.cases.push(case);
    }
    Ok(out)
}

fn case_from_object(obj: &Map<String, Value>, benchmark: &str) -> Result<TestCase, String> {
    let id = match obj.get("id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err("field `id` must be a string".into()),
        None => return Err("missing field `id`".into()),
    };
    let record_benchmark = match obj.get("benchmark") {
        Some(Value::String(b)) => b.to_ascii_lowercase(),
        Some(_) => return Err("field `benchmark` must be a string".into()),
        None => benchmark.to_string(),
    };
    if record_benchmark != benchmark {
        return Err(format!("record belongs to benchmark `{record_benchmark}`, not `{benchmark}`"));
    }
    let task = match obj.get("task") {
        None => TaskKind::OutputPrediction,
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|_| format!("field `task` must be \"output_prediction\" or \"translation\", got {v}"))?,
    };
    let code = take_str(obj, &CODE_ALIASES, "code")?;
    let input = match take_str(obj, &["input"], "input") {
        Ok(s) => s,
        Err(e) if task == TaskKind::OutputPrediction => return Err(e),
        Err(_) => String::new(),
    };
    let output = match take_str(obj, &["output"], "output") {
        Ok(s) => s,
        Err(e) if task == TaskKind::OutputPrediction => return Err(e),
        Err(_) => String::new(),
    };
    let tests = match TESTS_ALIASES.iter().find_map(|n| obj.get(*n)) {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| format!("field `tests`: {e}"))?,
        None => Vec::new(),
    };
    if task == TaskKind::Translation && tests.is_empty() {
        return Err("translation record needs a non-empty `tests` list".into());
    }
    let entry_point = match obj.get("entry_point") {
        Some(Value::String(s)) => s.clone(),
        _ => DEFAULT_ENTRY_POINT.to_string(),
    };
    for key in obj.keys() {
        if !KNOWN_FIELDS.contains(&key.as_str()) && !CODE_ALIASES.contains(&key.as_str()) && !TESTS_ALIASES.contains(&key.as_str()) {
            log::debug!("case {id}: ignoring unmapped field `{key}`");
        }
    }
    Ok(TestCase {
        program: SourceUnit::new(code, format!("{benchmark}/{id}")),
        id,
        benchmark: benchmark.to_string(),
        task,
        input_repr: input,
        expected_repr: output,
        tests,
        entry_point,
    })
}

/// Serializes cases back to the case schema.
pub fn case_record(case: &TestCase) -> Value {
    let mut obj = serde_json::json!({
        "id": case.id,
        "benchmark": case.benchmark,
        "task": case.task,
        "code": case.program.text,
        "input": case.input_repr,
        "output": case.expected_repr,
    });
    if !case.tests.is_empty() {
        obj["tests"] = serde_json::to_value(&case.tests).unwrap();
    }
    if case.entry_point != DEFAULT_ENTRY_POINT {
        obj["entry_point"] = Value::String(case.entry_point.clone());
    }
    obj
}

/// Applies `plan` to every case. Each case draws from its own random
/// stream, so results do not depend on case order or the executor.
pub fn mutate_cases(
    cases: &[TestCase],
    plan: &MutationPlan,
    config: &MutationConfig,
    exec: Exec,
) -> Vec<Result<MutationOutcome, MutateError>> {
    exec.map(cases, |c| compose_with(&c.program, &plan.kinds, config, &c.context()))
}

/// Number of cases the operator applies to.
pub fn count_applicable(cases: &[TestCase], kind: MutationKind, exec: Exec) -> usize {
    applicable_ids(cases, kind, &MutationConfig::default(), exec).len()
}

/// Ids of the cases the operator applies to, in dataset order.
pub fn applicable_ids(cases: &[TestCase], kind: MutationKind, config: &MutationConfig, exec: Exec) -> Vec<String> {
    let flags = exec.map(cases, |c| crate::mutate::applicable_with(&c.program, kind, config, &c.context()));
    cases
        .iter()
        .zip(flags)
        .filter(|(_, f)| *f)
        .map(|(c, _)| c.id.clone())
        .collect()
}

/// One line of a mutated dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutatedRecord {
    pub id: String,
    pub mutation: String,
    pub seed: u64,
    pub code: String,
    pub applied: bool,
    pub edits: usize,
}

impl MutatedRecord {
    pub fn new(case: &TestCase, outcome: &MutationOutcome, mutation: &str, seed: u64) -> Self {
        MutatedRecord {
            id: case.id.clone(),
            mutation: mutation.to_string(),
            seed,
            code: outcome.mutated.text.clone(),
            applied: outcome.applied,
            edits: outcome.edits.len(),
        }
    }

    /// Record for a case the operator could not process: original text,
    /// not applied.
    pub fn unchanged(case: &TestCase, mutation: &str, seed: u64) -> Self {
        MutatedRecord {
            id: case.id.clone(),
            mutation: mutation.to_string(),
            seed,
            code: case.program.text.clone(),
            applied: false,
            edits: 0,
        }
    }
}

/// Sidecar written next to every mutated dataset (`<stem>.meta.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutatedMeta {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub mutation: String,
    pub kinds: Vec<MutationKind>,
    pub benchmark: String,
    pub source: PathBuf,
    pub source_sha256: String,
    pub config: MutationConfig,
    /// Which bindings are renamed by the VarNorm operators.
    pub rename_scope: String,
    pub records: usize,
    pub applied: usize,
    /// Cases where every constituent of a combo produced an edit.
    pub all_applied: usize,
    pub rejects: Vec<Reject>,
}

pub const RENAME_SCOPE: &str = "function-parameters-and-locals";

pub fn meta_path(dataset: &Path) -> PathBuf {
    let stem = dataset.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    dataset.with_file_name(format!("{stem}.meta.json"))
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes a mutated dataset; `outcomes` must align with `cases`.
/// Cases whose mutation failed are written unchanged with `applied=false`.
pub fn emit(
    cases: &[TestCase],
    outcomes: &[Result<MutationOutcome, MutateError>],
    mutation: &str,
    seed: u64,
    path: &Path,
) -> Result<Vec<MutatedRecord>, DatasetError> {
    if cases.len() != outcomes.len() {
        return Err(DatasetError::Format {
            path: path.to_path_buf(),
            line: 0,
            reason: format!("{} outcomes for {} cases", outcomes.len(), cases.len()),
        });
    }
    let records: Vec<MutatedRecord> = cases
        .iter()
        .zip(outcomes)
        .map(|(c, o)| match o {
            Ok(o) => MutatedRecord::new(c, o, mutation, seed),
            Err(_) => MutatedRecord::unchanged(c, mutation, seed),
        })
        .collect();
    write_records(&records, path)?;
    Ok(records)
}

pub fn write_records(records: &[MutatedRecord], path: &Path) -> Result<(), DatasetError> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("records serialize");
        buf.push(b'\n');
    }
    write_atomic(path, &buf).map_err(|e| DatasetError::io(path, e))
}

pub fn write_meta(meta: &MutatedMeta, dataset: &Path) -> Result<(), DatasetError> {
    let path = meta_path(dataset);
    let mut bytes = serde_json::to_vec_pretty(meta).expect("meta serializes");
    bytes.push(b'\n');
    write_atomic(&path, &bytes).map_err(|e| DatasetError::io(&path, e))
}

pub fn read_meta(dataset: &Path) -> Result<MutatedMeta, DatasetError> {
    let path = meta_path(dataset);
    let text = std::fs::read_to_string(&path).map_err(|e| DatasetError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| DatasetError::Format {
        path,
        line: e.line(),
        reason: e.to_string(),
    })
}

pub fn load_mutated(path: &Path) -> Result<Vec<MutatedRecord>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: MutatedRecord = serde_json::from_str(line).map_err(|e| DatasetError::Format {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(r);
    }
    Ok(out)
}

/// Heuristic: a mutated dataset has a `mutation` field on its first record.
pub fn is_mutated_file(path: &Path) -> Result<bool, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    Ok(text
        .lines()
        .find(|l| !l.trim().is_empty())
        .and_then(|l| serde_json::from_str::<Value>(l).ok())
        .is_some_and(|v| v.get("mutation").is_some()))
}

/// Pairs mutated records with their source cases by id. Records whose id is
/// missing from `cases` are an error.
pub fn join_mutants<'a>(
    cases: &'a [TestCase],
    records: &'a [MutatedRecord],
) -> Result<Vec<(&'a TestCase, &'a MutatedRecord)>, String> {
    let by_id: BTreeMap<&str, &TestCase> = cases.iter().map(|c| (c.id.as_str(), c)).collect();
    records
        .iter()
        .map(|r| {
            by_id
                .get(r.id.as_str())
                .map(|c| (*c, r))
                .ok_or_else(|| format!("mutated record `{}` has no source case", r.id))
        })
        .collect()
}

/// True when every operator of `kinds` contributed an edit.
pub fn all_constituents_applied(outcome: &MutationOutcome, kinds: &[MutationKind]) -> bool {
    kinds.iter().all(|k| outcome.edits.iter().any(|e| e.op == *k))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = r#"{"id": "sample_0", "code": "def f(lists):\n    lists[1].clear()\n    lists[2] += lists[1]\n    return lists[0]", "input": "[[395, 666, 7, 4], [], [4223, 111]]", "output": "[395, 666, 7, 4]"}"#;

    #[test]
    fn loads_upstream_records() {
        let ds = parse_cases(FIG1, "cruxeval").unwrap();
        assert_eq!(ds.cases.len(), 1);
        let c = &ds.cases[0];
        assert_eq!(c.id, "sample_0");
        assert_eq!(c.task, TaskKind::OutputPrediction);
        assert_eq!(c.program.origin, "cruxeval/sample_0");
        assert_eq!(c.expected_repr, "[395, 666, 7, 4]");
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let ds = parse_cases("", "cruxeval").unwrap();
        assert!(ds.cases.is_empty() && ds.rejects.is_empty());
        assert!(parse_cases("\n\n", "avatar").unwrap().cases.is_empty());
    }

    #[test]
    fn missing_output_names_the_field() {
        let line = r#"{"id": "a", "code": "def f(x):\n    return x", "input": "1"}"#;
        let (lineno, reason) = parse_cases(&format!("\n{line}"), "cruxeval").unwrap_err();
        assert_eq!(lineno, 2);
        assert!(reason.contains("`output`"), "{reason}");
    }

    #[test]
    fn unparsable_programs_are_rejected_not_dropped() {
        let text = format!("{FIG1}\n{}", r#"{"id": "bad", "code": "def f(:", "input": "1", "output": "1"}"#);
        let ds = parse_cases(&text, "cruxeval").unwrap();
        assert_eq!(ds.cases.len(), 1);
        assert_eq!(ds.rejects.len(), 1);
        assert_eq!(ds.rejects[0].id, "bad");
        assert_eq!(ds.rejects[0].line, 2);
    }

    #[test]
    fn duplicate_ids_and_bad_benchmarks_fail() {
        assert!(parse_cases(&format!("{FIG1}\n{FIG1}"), "cruxeval").is_err());
        assert!(parse_cases(FIG1, "humaneval").is_err());
    }

    #[test]
    fn translation_records_keep_vectors() {
        let line = r#"{"id": "t1", "benchmark": "avatar", "task": "translation", "code": "print(int(input()) * 2)", "input": "", "output": "", "tests": [{"stdin": "2\n", "stdout": "4\n"}]}"#;
        let ds = parse_cases(line, "avatar").unwrap();
        assert_eq!(ds.cases[0].tests, vec![TestVector { stdin: "2\n".into(), stdout: "4\n".into() }]);
        let round = case_record(&ds.cases[0]).to_string();
        let again = parse_cases(&round, "avatar").unwrap();
        assert_eq!(again.cases[0].tests, ds.cases[0].tests);
    }

    #[test]
    fn keyword_arguments_of_the_call_are_context() {
        let line = r#"{"id": "k", "code": "def f(text, sep):\n    return text.split(sep)", "input": "'a b', sep=' '", "output": "['a', 'b']"}"#;
        let c = &parse_cases(line, "cruxeval").unwrap().cases[0];
        assert_eq!(c.context().keyword_args, vec!["sep".to_string()]);
    }

    #[test]
    fn emit_round_trips_and_keeps_unapplied_text() {
        let text = format!(
            "{FIG1}\n{}",
            r#"{"id": "s1", "code": "def f(s):\n    return s.upper()", "input": "'a'", "output": "'A'"}"#
        );
        let cases = parse_cases(&text, "cruxeval").unwrap().cases;
        let plan = MutationPlan::parse("constunfold").unwrap();
        let outcomes = mutate_cases(&cases, &plan, &MutationConfig::with_seed(3), Exec::Sequential);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        let written = emit(&cases, &outcomes, &plan.tag, 3, &path).unwrap();
        let loaded = load_mutated(&path).unwrap();
        assert_eq!(loaded, written);
        assert!(loaded[0].applied);
        assert!(loaded[0].code.contains(" - ") || loaded[0].code.contains(" + "));
        assert!(!loaded[1].applied);
        assert_eq!(loaded[1].code, cases[1].program.text);
        assert!(is_mutated_file(&path).unwrap());
        assert_eq!(join_mutants(&cases, &loaded).unwrap().len(), 2);
    }

    #[test]
    fn census_counts_match_flags() {
        let text = format!(
            "{FIG1}\n{}",
            r#"{"id": "s1", "code": "def f(s):\n    for c in s:\n        if c:\n            return c\n    return s", "input": "'a'", "output": "'a'"}"#
        );
        let cases = parse_cases(&text, "cruxeval").unwrap().cases;
        assert_eq!(count_applicable(&cases, MutationKind::VarNormI, Exec::Parallel), 2);
        assert_eq!(count_applicable(&cases, MutationKind::For2While, Exec::Sequential), 1);
        assert_eq!(count_applicable(&cases, MutationKind::CondAug, Exec::Sequential), 1);
        assert_eq!(count_applicable(&cases[..1], MutationKind::For2While, Exec::Sequential), 0);
    }

    #[test]
    fn meta_path_is_a_sibling() {
        assert_eq!(meta_path(Path::new("out/fuv.jsonl")), PathBuf::from("out/fuv.meta.json"));
    }
}
