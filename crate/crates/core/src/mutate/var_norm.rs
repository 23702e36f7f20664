//! VarNormI (sequential `varN` names) and VarNormII (random names).

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{CaseContext, EditList, MutateError, MutationConfig, MutationKind, Skip};
use crate::syntax::ast::Module;
use crate::syntax::scope::{analyze_scopes_excluding, ScopeTable};
use crate::syntax::{is_builtin, is_keyword};

fn table(tree: &Module, ctx: &CaseContext) -> ScopeTable {
    analyze_scopes_excluding(tree, &ctx.keyword_args)
}

fn dynamic_skip(table: &ScopeTable, op: MutationKind) -> Vec<Skip> {
    table
        .dynamic_access
        .map(|span| Skip {
            span,
            reason: "dynamic-name-access".into(),
            op,
        })
        .into_iter()
        .collect()
}

/// Spellings that stay in the program after renaming: every identifier
/// except those whose occurrences are all covered by renameable bindings.
fn unrenamed_spellings(table: &ScopeTable) -> BTreeSet<&str> {
    let mut covered: std::collections::BTreeMap<&str, usize> = Default::default();
    for b in &table.bindings {
        *covered.entry(b.name.as_str()).or_default() += b.refs.len();
    }
    table
        .identifiers
        .iter()
        .map(String::as_str)
        .filter(|name| {
            let total = table.occurrences.get(*name).copied().unwrap_or(0);
            covered.get(name).copied() != Some(total) || table.excluded.contains_key(*name)
        })
        .collect()
}

fn rename_edits(table: &ScopeTable, names: &[String]) -> EditList {
    let mut edits = EditList::new();
    for (b, new) in table.bindings.iter().zip(names) {
        for span in &b.refs {
            edits.push((*span, new.clone()));
        }
    }
    edits.sort_by_key(|(s, _)| s.start);
    edits
}

pub fn sequential(_text: &str, tree: &Module, ctx: &CaseContext) -> (EditList, Vec<Skip>) {
    let table = table(tree, ctx);
    let skipped = dynamic_skip(&table, MutationKind::VarNormI);
    let reserved = unrenamed_spellings(&table);
    let mut names = Vec::with_capacity(table.bindings.len());
    let mut index = 0usize;
    for _ in &table.bindings {
        let name = loop {
            index += 1;
            let candidate = format!("var{index}");
            if !reserved.contains(candidate.as_str()) && !is_keyword(&candidate) && !is_builtin(&candidate) {
                break candidate;
            }
        };
        names.push(name);
    }
    (rename_edits(&table, &names), skipped)
}

pub fn random(
    _text: &str,
    tree: &Module,
    ctx: &CaseContext,
    config: &MutationConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(EditList, Vec<Skip>), MutateError> {
    if config.random_name_length < 4 {
        return Err(MutateError::Config("random_name_length must be at least 4".into()));
    }
    let table = table(tree, ctx);
    let skipped = dynamic_skip(&table, MutationKind::VarNormII);
    let mut taken: BTreeSet<String> = table.identifiers.clone();
    let mut names = Vec::with_capacity(table.bindings.len());
    for _ in &table.bindings {
        let name = loop {
            let candidate: String = (0..config.random_name_length)
                .map(|_| rng.random_range(b'a'..=b'z') as char)
                .collect();
            if !taken.contains(&candidate) && !is_keyword(&candidate) && !is_builtin(&candidate) {
                break candidate;
            }
        };
        taken.insert(name.clone());
        names.push(name);
    }
    Ok((rename_edits(&table, &names), skipped))
}
