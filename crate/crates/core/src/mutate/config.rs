//! Operator configuration.

use serde::{Deserialize, Serialize};

use super::const_eval::{classify_pool_entry, PoolEntryKind};
use super::MutateError;

/// Tautologies and contradictions used by CondAug.
pub const DEFAULT_TAUTOLOGY_POOL: &[&str] = &[
    "(8 > 6) or (8 < 6)",
    "True or False",
    "(3 == 3) and (5 != 2)",
    "not (4 > 9)",
    "(7 < 2) and (7 > 2)",
    "False and True",
    "(1 == 2) or (3 > 5)",
    "not (9 >= 4)",
];

/// Which parts of a program operators may edit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RegionPolicy {
    /// Only code inside function bodies; module-level code (including the
    /// benchmark's test driver) is never edited.
    #[default]
    #[serde(rename = "function-bodies-only")]
    FunctionBodiesOnly,
}

impl RegionPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionPolicy::FunctionBodiesOnly => "function-bodies-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MutationConfig {
    pub seed: u64,
    pub random_name_length: usize,
    /// Inclusive range the ConstUnfold offset `k` is drawn from.
    pub unfold_offset_range: (u32, u32),
    pub tautology_pool: Vec<String>,
    pub region_policy: RegionPolicy,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            seed: 0,
            random_name_length: 8,
            unfold_offset_range: (1, 9),
            tautology_pool: DEFAULT_TAUTOLOGY_POOL.iter().map(|s| s.to_string()).collect(),
            region_policy: RegionPolicy::FunctionBodiesOnly,
        }
    }
}

impl MutationConfig {
    pub fn with_seed(seed: u64) -> Self {
        MutationConfig {
            seed,
            ..Self::default()
        }
    }

    /// Checks the invariants, including that every pool entry is a
    /// side-effect-free constant that evaluates to `True` or `False`.
    pub fn validate(&self) -> Result<(), MutateError> {
        if self.random_name_length < 4 {
            return Err(MutateError::Config(format!(
                "random_name_length must be at least 4 (got {})",
                self.random_name_length
            )));
        }
        let (lo, hi) = self.unfold_offset_range;
        if lo == 0 || lo > hi {
            return Err(MutateError::Config(format!(
                "unfold_offset_range must be a non-empty interval of positive integers (got [{lo}, {hi}])"
            )));
        }
        self.classified_pool().map(|_| ())
    }

    /// Pool entries with their truth value.
    pub fn classified_pool(&self) -> Result<Vec<(String, PoolEntryKind)>, MutateError> {
        if self.tautology_pool.is_empty() {
            return Err(MutateError::Config("tautology_pool is empty".into()));
        }
        self.tautology_pool
            .iter()
            .map(|entry| {
                classify_pool_entry(entry)
                    .map(|kind| (entry.trim().to_string(), kind))
                    .map_err(|msg| MutateError::Config(format!("tautology_pool entry `{entry}`: {msg}")))
            })
            .collect()
    }
}
