//! One evaluation run: ground truth, sampling, grading and the summary
//! that the report is built from.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use super::{
    build_prompt, grade, ground_truth, pass_at_1, sample_completions, CompletionClient, CompletionError, EvalError,
    FailureReason, GradeRecord, GroundTruth, RetryPolicy, SampleCache, SamplingPlan, TranslationCommand,
    GRADING_RULES,
};
use crate::dataset::TestCase;
use crate::exec::Exec;
use crate::runner::{Runner, DEFAULT_TIMEOUT_MS};

pub const GRADES_SUFFIX: &str = ".grades.jsonl";
pub const SUMMARY_SUFFIX: &str = ".summary.json";

/// Condition name of the unmodified programs.
pub const ORIGINAL: &str = "original";

/// One prompt to evaluate: `shown` is the program given to the model,
/// `original` the unmutated case that defines the ground truth.
#[derive(Debug, Clone)]
pub struct EvalItem<'a> {
    pub original: &'a TestCase,
    pub shown: TestCase,
    pub mutation: String,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub plan: SamplingPlan,
    pub retry: RetryPolicy,
    pub timeout_ms: u64,
    pub translation: Option<TranslationCommand>,
    pub exec: Exec,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            plan: SamplingPlan::default(),
            retry: RetryPolicy::default(),
            timeout_ms: DEFAULT_TIMEOUT_MS,
            translation: None,
            exec: Exec::default(),
        }
    }
}

/// Grades of a run plus request accounting.
#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub records: Vec<GradeRecord>,
    pub requests: usize,
    pub cache_hits: usize,
    pub cancelled: bool,
}

/// Samples and grades every item. Records come back in item order, samples
/// in index order.
pub fn evaluate(
    client: &dyn CompletionClient,
    cache: Option<&SampleCache>,
    runner: &dyn Runner,
    items: &[EvalItem<'_>],
    opts: &EvalOptions,
    cancel: &AtomicBool,
) -> Result<EvalOutput, EvalError> {
    opts.plan.validate().map_err(EvalError::Config)?;
    if opts.translation.is_none() && items.iter().any(|i| i.shown.task == crate::dataset::TaskKind::Translation) {
        return Err(EvalError::Config(
            "translation cases need a translation command to run translated programs".into(),
        ));
    }

    let mut originals: Vec<&TestCase> = Vec::new();
    let mut seen = HashSet::new();
    for it in items {
        if seen.insert(it.original.id.as_str()) {
            originals.push(it.original);
        }
    }
    let truths: HashMap<&str, GroundTruth> = originals
        .iter()
        .map(|c| c.id.as_str())
        .zip(opts.exec.map(&originals, |c| ground_truth(runner, c, opts.timeout_ms)))
        .collect();

    let prompts: Vec<String> = items.iter().map(|i| build_prompt(&i.shown)).collect();
    let samples = sample_completions(client, cache, &prompts, &opts.plan, opts.retry, cancel);
    let requests = samples.iter().flatten().filter(|s| !s.from_cache).count();
    let cache_hits = samples.iter().flatten().filter(|s| s.from_cache).count();

    let jobs: Vec<(usize, usize)> = (0..items.len())
        .flat_map(|i| (0..opts.plan.n_samples).map(move |s| (i, s)))
        .collect();
    let records = opts.exec.map(&jobs, |&(i, s)| {
        let it = &items[i];
        grade(
            runner,
            &it.shown,
            &truths[it.original.id.as_str()],
            &it.mutation,
            s,
            &samples[i][s].completion,
            opts.translation.as_ref(),
            opts.timeout_ms,
        )
    });
    let cancelled = cancel.load(Ordering::Relaxed)
        || samples
            .iter()
            .flatten()
            .any(|s| s.completion == Err(CompletionError::Cancelled));
    Ok(EvalOutput {
        records,
        requests,
        cache_hits,
        cancelled,
    })
}

/// Pass@1 of the original and mutated programs on a subset of case ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    pub n_cases: usize,
    pub origin: Option<f64>,
    pub mutated: Option<f64>,
}

/// Everything the report needs from one (benchmark, model, mutation) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub benchmark: String,
    pub model: String,
    pub mutation: String,
    pub n_cases: usize,
    pub samples_per_case: usize,
    /// Original programs, all cases.
    pub origin_full: Option<f64>,
    /// Cases where the mutation applied.
    pub applied: SubsetScore,
    /// Combos only: cases where every constituent applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub all_applied: Option<SubsetScore>,
    pub applied_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub all_applied_ids: Option<Vec<String>>,
    pub failure_counts: BTreeMap<String, usize>,
    pub requests: usize,
    pub cache_hits: usize,
    pub grading_rules: String,
    pub runner: String,
}

fn pass_on(records: &[GradeRecord], mutation: &str, ids: Option<&HashSet<&str>>) -> Option<f64> {
    let subset: Vec<GradeRecord> = records
        .iter()
        .filter(|r| r.mutation == mutation && ids.is_none_or(|s| s.contains(r.case_id.as_str())))
        .cloned()
        .collect();
    pass_at_1(&subset).ok()
}

fn subset_score(records: &[GradeRecord], mutation: &str, ids: &[String]) -> SubsetScore {
    let set: HashSet<&str> = ids.iter().map(String::as_str).collect();
    SubsetScore {
        n_cases: ids.len(),
        origin: pass_on(records, ORIGINAL, Some(&set)),
        mutated: pass_on(records, mutation, Some(&set)),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn summarize(
    benchmark: &str,
    model: &str,
    mutation: &str,
    n_cases: usize,
    output: &EvalOutput,
    samples_per_case: usize,
    applied_ids: Vec<String>,
    all_applied_ids: Option<Vec<String>>,
    runner: &str,
) -> RunSummary {
    let records = &output.records;
    let mut failure_counts = BTreeMap::new();
    for r in records {
        let key = serde_json::to_value(r.failure_reason)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        *failure_counts.entry(key).or_insert(0) += 1;
    }
    failure_counts.remove(
        serde_json::to_value(FailureReason::None)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .as_deref()
            .unwrap_or("none"),
    );
    RunSummary {
        benchmark: benchmark.into(),
        model: model.into(),
        mutation: mutation.into(),
        n_cases,
        samples_per_case,
        origin_full: pass_on(records, ORIGINAL, None),
        applied: subset_score(records, mutation, &applied_ids),
        all_applied: all_applied_ids.as_ref().map(|ids| subset_score(records, mutation, ids)),
        applied_ids,
        all_applied_ids,
        failure_counts,
        requests: output.requests,
        cache_hits: output.cache_hits,
        grading_rules: GRADING_RULES.into(),
        runner: runner.into(),
    }
}
