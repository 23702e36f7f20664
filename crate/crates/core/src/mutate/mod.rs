//! Semantic-preserving mutation operators and their seeded composition.
//!
//! Every operator works by computing a set of non-overlapping text edits
//! against its input source. Edits never touch module-level code, so the
//! test driver of a benchmark case is left alone. The resulting
//! [`MutationOutcome`] carries the edit log, which replays over the
//! original text to reproduce the mutant byte-for-byte.

mod cond_augment;
mod config;
mod const_eval;
mod const_unfold;
mod edit;
mod for_to_while;
mod regions;
mod rng;
mod var_norm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::syntax::{SourceUnit, Span, SyntaxError};

pub use config::{MutationConfig, RegionPolicy, DEFAULT_TAUTOLOGY_POOL};
pub use const_eval::{classify_pool_entry, PoolEntryKind};
pub use edit::{apply_edits, replay, Edit, Skip};
pub use rng::case_rng;

/// The five mutation operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationKind {
    #[serde(rename = "varnorm1")]
    VarNormI,
    #[serde(rename = "varnorm2")]
    VarNormII,
    #[serde(rename = "constunfold")]
    ConstUnfold,
    #[serde(rename = "for2while")]
    For2While,
    #[serde(rename = "condaug")]
    CondAug,
}

impl MutationKind {
    pub const ALL: [MutationKind; 5] = [
        MutationKind::VarNormI,
        MutationKind::VarNormII,
        MutationKind::ConstUnfold,
        MutationKind::For2While,
        MutationKind::CondAug,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            MutationKind::VarNormI => "varnorm1",
            MutationKind::VarNormII => "varnorm2",
            MutationKind::ConstUnfold => "constunfold",
            MutationKind::For2While => "for2while",
            MutationKind::CondAug => "condaug",
        }
    }

    /// Single-letter code used by the canonical combo names.
    fn letter(self) -> char {
        match self {
            MutationKind::VarNormI | MutationKind::VarNormII => 'v',
            MutationKind::ConstUnfold => 'u',
            MutationKind::For2While => 'f',
            MutationKind::CondAug => 'a',
        }
    }
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MutationKind {
    type Err = MutateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MutationKind::ALL
            .into_iter()
            .find(|k| k.tag() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| MutateError::UnknownTag(s.to_string()))
    }
}

/// FUV = For2While + ConstUnfold + VarNormII.
pub const FUV: [MutationKind; 3] = [
    MutationKind::For2While,
    MutationKind::ConstUnfold,
    MutationKind::VarNormII,
];
/// AUV = CondAug + ConstUnfold + VarNormI.
pub const AUV: [MutationKind; 3] = [
    MutationKind::CondAug,
    MutationKind::ConstUnfold,
    MutationKind::VarNormI,
];
/// AFU = CondAug + For2While + ConstUnfold.
pub const AFU: [MutationKind; 3] = [
    MutationKind::CondAug,
    MutationKind::For2While,
    MutationKind::ConstUnfold,
];

/// An operator or an ordered composition of operators, as named on the
/// command line (`constunfold`, `fuv`, `condaug+varnorm1`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MutationPlan {
    pub tag: String,
    pub kinds: Vec<MutationKind>,
}

impl MutationPlan {
    pub fn single(kind: MutationKind) -> Self {
        MutationPlan {
            tag: kind.tag().to_string(),
            kinds: vec![kind],
        }
    }

    pub fn is_combo(&self) -> bool {
        self.kinds.len() > 1
    }

    /// Parses one `--ops` element.
    pub fn parse(s: &str) -> Result<Self, MutateError> {
        let s = s.trim().to_ascii_lowercase();
        let kinds: Vec<MutationKind> = match s.as_str() {
            "fuv" => FUV.to_vec(),
            "auv" => AUV.to_vec(),
            "afu" => AFU.to_vec(),
            _ => s
                .split('+')
                .map(MutationKind::from_str)
                .collect::<Result<_, _>>()?,
        };
        check_kinds(&kinds)?;
        Ok(MutationPlan { tag: s, kinds })
    }

    /// Parses a comma-separated `--ops` list.
    pub fn parse_list(s: &str) -> Result<Vec<Self>, MutateError> {
        let plans: Vec<Self> = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(MutationPlan::parse)
            .collect::<Result<_, _>>()?;
        if plans.is_empty() {
            return Err(MutateError::InvalidKinds("no mutation selected".into()));
        }
        Ok(plans)
    }

    /// Letters of the constituents, e.g. `fuv`.
    pub fn letters(&self) -> String {
        self.kinds.iter().map(|k| k.letter()).collect()
    }
}

impl fmt::Display for MutationPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MutateError {
    #[error("cannot mutate unparsable program: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("unknown mutation tag `{0}`")]
    UnknownTag(String),
    #[error("invalid mutation list: {0}")]
    InvalidKinds(String),
    #[error("invalid mutation config: {0}")]
    Config(String),
}

fn check_kinds(kinds: &[MutationKind]) -> Result<(), MutateError> {
    if kinds.is_empty() {
        return Err(MutateError::InvalidKinds("empty".into()));
    }
    for (i, k) in kinds.iter().enumerate() {
        if kinds[..i].contains(k) {
            return Err(MutateError::InvalidKinds(format!("`{}` listed twice", k)));
        }
    }
    Ok(())
}

/// Result of applying one operator (or a composition) to a program.
#[derive(Debug, Clone)]
pub struct MutationOutcome {
    pub mutated: SourceUnit,
    pub applied: bool,
    pub edits: Vec<Edit>,
    pub skipped: Vec<Skip>,
}

impl MutationOutcome {
    fn from_edits(unit: &SourceUnit, edits: Vec<Edit>, skipped: Vec<Skip>) -> Self {
        let text = apply_edits(&unit.text, &edits);
        MutationOutcome {
            mutated: SourceUnit::new(text, unit.origin.clone()),
            applied: !edits.is_empty(),
            edits,
            skipped,
        }
    }
}

/// Facts about the benchmark case that the program text alone does not
/// reveal, such as keyword arguments used by the case's call site.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CaseContext {
    pub keyword_args: Vec<String>,
}

fn tree_of(unit: &SourceUnit) -> Result<&crate::syntax::Module, MutateError> {
    unit.tree().map_err(|e| MutateError::Syntax(e.clone()))
}

/// VarNormI: renames bindings to `var1`, `var2`, ... in order of first binding.
pub fn var_norm_sequential(unit: &SourceUnit) -> Result<MutationOutcome, MutateError> {
    apply_with(unit, MutationKind::VarNormI, &MutationConfig::default(), &CaseContext::default())
}

/// VarNormII: renames bindings to seeded random lowercase names.
pub fn var_norm_random(unit: &SourceUnit, config: &MutationConfig) -> Result<MutationOutcome, MutateError> {
    apply_with(unit, MutationKind::VarNormII, config, &CaseContext::default())
}

/// ConstUnfold: rewrites integer literals as two-term arithmetic.
pub fn const_unfold(unit: &SourceUnit, config: &MutationConfig) -> Result<MutationOutcome, MutateError> {
    apply_with(unit, MutationKind::ConstUnfold, config, &CaseContext::default())
}

/// For2While: rewrites `for` loops with the iterator protocol.
pub fn for_to_while(unit: &SourceUnit) -> Result<MutationOutcome, MutateError> {
    apply_with(unit, MutationKind::For2While, &MutationConfig::default(), &CaseContext::default())
}

/// CondAug: conjoins tautologies / disjoins contradictions onto `if` tests.
pub fn cond_augment(unit: &SourceUnit, config: &MutationConfig) -> Result<MutationOutcome, MutateError> {
    apply_with(unit, MutationKind::CondAug, config, &CaseContext::default())
}

pub fn apply(unit: &SourceUnit, kind: MutationKind, config: &MutationConfig) -> Result<MutationOutcome, MutateError> {
    apply_with(unit, kind, config, &CaseContext::default())
}

pub fn apply_with(
    unit: &SourceUnit,
    kind: MutationKind,
    config: &MutationConfig,
    ctx: &CaseContext,
) -> Result<MutationOutcome, MutateError> {
    let tree = tree_of(unit)?;
    let mut rng = case_rng(config.seed, &unit.origin, kind.tag());
    let (edits, skipped) = match kind {
        MutationKind::VarNormI => var_norm::sequential(&unit.text, tree, ctx),
        MutationKind::VarNormII => var_norm::random(&unit.text, tree, ctx, config, &mut rng)?,
        MutationKind::ConstUnfold => const_unfold::unfold(&unit.text, tree, config, &mut rng)?,
        MutationKind::For2While => for_to_while::convert(&unit.text, tree),
        MutationKind::CondAug => cond_augment::augment(&unit.text, tree, config, &mut rng)?,
    };
    let edits = edits
        .into_iter()
        .map(|(span, new)| Edit {
            span,
            old: unit.text[span.range()].to_string(),
            new,
            op: kind,
        })
        .filter(|e| e.old != e.new)
        .collect();
    Ok(MutationOutcome::from_edits(unit, edits, skipped))
}

/// Applies `kinds` left to right, each consuming the previous output.
pub fn compose(unit: &SourceUnit, kinds: &[MutationKind], config: &MutationConfig) -> Result<MutationOutcome, MutateError> {
    compose_with(unit, kinds, config, &CaseContext::default())
}

pub fn compose_with(
    unit: &SourceUnit,
    kinds: &[MutationKind],
    config: &MutationConfig,
    ctx: &CaseContext,
) -> Result<MutationOutcome, MutateError> {
    check_kinds(kinds)?;
    tree_of(unit)?;
    let mut current = unit.clone();
    let mut edits = Vec::new();
    let mut skipped = Vec::new();
    for &kind in kinds {
        let out = apply_with(&current, kind, config, ctx)?;
        edits.extend(out.edits);
        skipped.extend(out.skipped);
        current = out.mutated;
    }
    Ok(MutationOutcome {
        applied: !edits.is_empty(),
        mutated: current,
        edits,
        skipped,
    })
}

/// True iff the operator would produce at least one edit.
pub fn applicable(unit: &SourceUnit, kind: MutationKind) -> bool {
    applicable_with(unit, kind, &MutationConfig::default(), &CaseContext::default())
}

pub fn applicable_with(unit: &SourceUnit, kind: MutationKind, config: &MutationConfig, ctx: &CaseContext) -> bool {
    apply_with(unit, kind, config, ctx).map(|o| o.applied).unwrap_or(false)
}

pub(crate) type EditList = Vec<(Span, String)>;

#[cfg(test)]
mod tests;
