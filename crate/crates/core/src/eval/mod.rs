//! Model evaluation: prompts, sampling through a chat-completions endpoint
//! with an on-disk cache, answer extraction, grading by execution and
//! Pass@1.

mod client;
mod extract;
mod grade;
mod run;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{TaskKind, TestCase};

pub use client::{
    cache_key, sample_completions, CompletionClient, CompletionError, HttpClient, RetryPolicy, Sample, SampleCache,
};
pub use extract::{extract_answer, ExtractionFailure};
pub use grade::{ground_truth, grade, GroundTruth, TranslationCommand};
pub use run::{
    evaluate, summarize, EvalItem, EvalOptions, EvalOutput, RunSummary, SubsetScore, GRADES_SUFFIX, ORIGINAL, SUMMARY_SUFFIX,
};

/// Instruction preceding output-prediction prompts.
pub const EXECUTION_INSTRUCTION: &str = "Based on the given Python code, which may contain errors, complete the assert statement with the output when executing the code on the given test case. Do NOT output any extra information, even if the function is incorrect or incomplete. Output ``# done'' after the assertion.";

/// Instruction preceding translation prompts.
pub const TRANSLATION_INSTRUCTION: &str =
    "You are a code translation expert. Translate the Python code below to Java. Do NOT output any extra information.";

/// Version tag of the extraction and grading rules, recorded with results.
pub const GRADING_RULES: &str = "assert-rhs/literal-repr-v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEndpoint {
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub auth_token_env: String,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_request_timeout")]
    pub request_timeout_ms: u64,
}

fn default_max_tokens() -> u32 {
    1024
}

fn default_request_timeout() -> u64 {
    120_000
}

impl ModelEndpoint {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(format!("endpoint `{}`: base_url must be http(s)", self.model_name));
        }
        if self.model_name.trim().is_empty() {
            return Err("endpoint model_name is empty".into());
        }
        Ok(())
    }

    /// Reads an endpoints file: a JSON list of endpoints, or an object with
    /// an `endpoints` list.
    pub fn load_all(text: &str) -> Result<Vec<ModelEndpoint>, String> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum File {
            List(Vec<ModelEndpoint>),
            Wrapped { endpoints: Vec<ModelEndpoint> },
            Single(ModelEndpoint),
        }
        let eps = match serde_json::from_str::<File>(text).map_err(|e| format!("invalid endpoints file: {e}"))? {
            File::List(v) | File::Wrapped { endpoints: v } => v,
            File::Single(e) => vec![e],
        };
        if eps.is_empty() {
            return Err("endpoints file lists no endpoint".into());
        }
        for e in &eps {
            e.validate()?;
        }
        Ok(eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub n_samples: usize,
    pub temperature: f64,
    pub concurrency_limit: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            n_samples: 5,
            temperature: 0.2,
            concurrency_limit: 4,
        }
    }
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_samples < 1 {
            return Err("n_samples must be at least 1".into());
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err("temperature must be non-negative".into());
        }
        if self.concurrency_limit < 1 {
            return Err("concurrency_limit must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    None,
    ExtractionFailed,
    Mismatch,
    RuntimeError,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeRecord {
    pub case_id: String,
    pub mutation: String,
    pub sample_index: usize,
    pub raw_completion: String,
    pub extracted: Option<String>,
    pub correct: bool,
    pub failure_reason: FailureReason,
    /// Transport or runner error behind an incorrect grade, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// The prompt for a case, embedding `case.program` (which is the mutant
/// when the case was built from a mutated dataset).
pub fn build_prompt(case: &TestCase) -> String {
    match case.task {
        TaskKind::OutputPrediction => format!(
            "{EXECUTION_INSTRUCTION}\n\n{}\nassert {}({}) ==",
            case.program.text.trim_end(),
            case.entry_point,
            case.input_repr.trim()
        ),
        TaskKind::Translation => format!("{TRANSLATION_INSTRUCTION}\n\n{}", case.program.text.trim_end()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("pass@1 of an empty record set is undefined")]
    Empty,
    #[error("{0}")]
    Config(String),
}

/// Mean over cases of (correct samples / samples), grouping `records` by
/// case id.
pub fn pass_at_1(records: &[GradeRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut per_case: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in records {
        let e = per_case.entry(r.case_id.as_str()).or_default();
        e.0 += r.correct as usize;
        e.1 += 1;
    }
    let sum: f64 = per_case.values().map(|&(c, n)| c as f64 / n as f64).sum();
    Ok(sum / per_case.len() as f64)
}

#[cfg(test)]
mod tests;
