//! Reporting: BLEU similarity between original and mutated programs,
//! Pass@1 delta tables and tidy distribution data.
//!
//! Delta CSV columns:
//! `benchmark,model,mutation,n_cases,origin_full,origin_subset,mutated,delta_full_pp,delta_subset_pp`
//! (Pass@1 in percent, two decimals; empty when undefined). Strict combo
//! subsets, where every constituent applied, appear as extra rows whose
//! mutation is suffixed with `@all`.
//!
//! Distribution CSV columns: `benchmark,mutation,model,pass1` (Pass@1 as
//! a fraction, four decimals).

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{self, DatasetError};
use crate::eval::{RunSummary, ORIGINAL, SUMMARY_SUFFIX};
use crate::mutate::MutationPlan;

/// Declared in report headers: the BLEU variant used.
pub const BLEU_VARIANT: &str =
    "BLEU-4, sentence-level macro-average, add-one smoothing for n>=2, brevity penalty, identifier/number/punctuation tokens";

/// Highlight threshold (percentage points) for single mutations.
pub const SINGLE_THRESHOLD_PP: f64 = 10.0;
/// Highlight threshold (percentage points) for combos.
pub const COMBO_THRESHOLD_PP: f64 = 20.0;

/// Suffix of the strict all-constituents-applied combo rows.
pub const STRICT_SUFFIX: &str = "@all";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("BLEU needs index-aligned corpora, got {originals} originals and {mutants} mutants")]
    LengthMismatch { originals: usize, mutants: usize },
    #[error("no runs to report")]
    Empty,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{path}: {reason}")]
    Run { path: PathBuf, reason: String },
}

/// Splits source text into identifiers, numbers and single punctuation
/// symbols; whitespace separates tokens and is dropped.
pub fn tokenize(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        let word = |ch: char| ch.is_alphanumeric() || ch == '_';
        if word(c) {
            let mut end = start + c.len_utf8();
            while let Some(&(i, d)) = chars.peek() {
                if !word(d) {
                    break;
                }
                end = i + d.len_utf8();
                chars.next();
            }
            out.push(&text[start..end]);
        } else {
            out.push(&text[start..start + c.len_utf8()]);
        }
    }
    out
}

fn ngram_counts<'t, 'a>(tokens: &'t [&'a str], n: usize) -> HashMap<&'t [&'a str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence-level BLEU-4 of `hypothesis` against `reference`, in [0, 100].
/// Unigram precision is unsmoothed; orders 2-4 use add-one smoothing.
pub fn sentence_bleu(reference: &str, hypothesis: &str) -> f64 {
    let r = tokenize(reference);
    let h = tokenize(hypothesis);
    if h.is_empty() || r.is_empty() {
        return if h.is_empty() && r.is_empty() { 100.0 } else { 0.0 };
    }
    let mut log_sum = 0.0_f64;
    for n in 1..=4 {
        let hc = ngram_counts(&h, n);
        let rc = ngram_counts(&r, n);
        let total: usize = hc.values().sum();
        let matched: usize = hc.iter().map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0))).sum();
        let p = if n == 1 {
            if matched == 0 {
                return 0.0;
            }
            matched as f64 / total as f64
        } else {
            (matched as f64 + 1.0) / (total as f64 + 1.0)
        };
        log_sum += p.ln();
    }
    let (c, rl) = (h.len() as f64, r.len() as f64);
    let bp = if c > rl { 1.0 } else { (1.0 - rl / c).exp() };
    (100.0 * bp * (log_sum / 4.0).exp()).clamp(0.0, 100.0)
}

/// Macro-averaged sentence BLEU over index-aligned corpora.
pub fn bleu(originals: &[&str], mutants: &[&str]) -> Result<f64, ReportError> {
    if originals.len() != mutants.len() {
        return Err(ReportError::LengthMismatch {
            originals: originals.len(),
            mutants: mutants.len(),
        });
    }
    if originals.is_empty() {
        return Err(ReportError::Empty);
    }
    let sum: f64 = originals.iter().zip(mutants).map(|(o, m)| sentence_bleu(o, m)).sum();
    Ok(sum / originals.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub benchmark: String,
    pub mutation: String,
    /// Mutants compared (cases where the mutation applied).
    pub n_cases: usize,
    pub bleu: f64,
}

/// BLEU of a mutated dataset file against the original dataset named in
/// its sidecar metadata, over the applied mutants.
pub fn bleu_for_mutated(mutated: &Path) -> Result<BleuScore, ReportError> {
    let meta = dataset::read_meta(mutated)?;
    let records = dataset::load_mutated(mutated)?;
    let source = if meta.source.is_absolute() || meta.source.exists() {
        meta.source.clone()
    } else {
        mutated.parent().unwrap_or(Path::new(".")).join(&meta.source)
    };
    let original = dataset::load(&source, &meta.benchmark)?;
    let by_id: HashMap<&str, &str> = original
        .cases
        .iter()
        .map(|c| (c.id.as_str(), c.program.text.as_str()))
        .collect();
    let (mut o, mut m) = (Vec::new(), Vec::new());
    for r in records.iter().filter(|r| r.applied) {
        if let Some(text) = by_id.get(r.id.as_str()) {
            o.push(*text);
            m.push(r.code.as_str());
        }
    }
    Ok(BleuScore {
        benchmark: meta.benchmark,
        mutation: meta.mutation,
        n_cases: o.len(),
        bleu: bleu(&o, &m)?,
    })
}

/// True when the tag names a composition of several operators.
pub fn is_combo(mutation: &str) -> bool {
    let base = mutation.strip_suffix(STRICT_SUFFIX).unwrap_or(mutation);
    MutationPlan::parse(base).is_ok_and(|p| p.is_combo())
}

/// Whether a delta (percentage points) is a highlighted drop.
pub fn is_highlighted(delta_pp: f64, combo: bool) -> bool {
    let threshold = if combo { COMBO_THRESHOLD_PP } else { SINGLE_THRESHOLD_PP };
    delta_pp < -threshold
}

/// One (benchmark, model, mutation) cell; Pass@1 values in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub benchmark: String,
    pub model: String,
    pub mutation: String,
    pub n_cases: usize,
    pub origin_full: Option<f64>,
    pub origin_subset: Option<f64>,
    pub mutated: Option<f64>,
}

impl ReportRow {
    pub fn delta_full_pp(&self) -> Option<f64> {
        Some(self.mutated? - self.origin_full?)
    }

    pub fn delta_subset_pp(&self) -> Option<f64> {
        Some(self.mutated? - self.origin_subset?)
    }

    pub fn combo(&self) -> bool {
        is_combo(&self.mutation)
    }
}

/// Report rows of one run summary: the applied subset, plus the strict
/// subset for combos.
pub fn rows_from_summary(s: &RunSummary) -> Vec<ReportRow> {
    let pct = |v: Option<f64>| v.map(|x| x * 100.0);
    let mut rows = Vec::new();
    if s.mutation == ORIGINAL {
        rows.push(ReportRow {
            benchmark: s.benchmark.clone(),
            model: s.model.clone(),
            mutation: ORIGINAL.into(),
            n_cases: s.n_cases,
            origin_full: pct(s.origin_full),
            origin_subset: pct(s.origin_full),
            mutated: None,
        });
        return rows;
    }
    rows.push(ReportRow {
        benchmark: s.benchmark.clone(),
        model: s.model.clone(),
        mutation: s.mutation.clone(),
        n_cases: s.applied.n_cases,
        origin_full: pct(s.origin_full),
        origin_subset: pct(s.applied.origin),
        mutated: pct(s.applied.mutated),
    });
    if let Some(strict) = &s.all_applied {
        rows.push(ReportRow {
            benchmark: s.benchmark.clone(),
            model: s.model.clone(),
            mutation: format!("{}{STRICT_SUFFIX}", s.mutation),
            n_cases: strict.n_cases,
            origin_full: pct(s.origin_full),
            origin_subset: pct(strict.origin),
            mutated: pct(strict.mutated),
        });
    }
    rows
}

/// Reads every `*.summary.json` under `dir` (recursively), sorted by path.
pub fn load_runs(dir: &Path) -> Result<Vec<RunSummary>, ReportError> {
    let mut paths = Vec::new();
    collect(dir, &mut paths).map_err(|e| ReportError::Dataset(DatasetError::io(dir, e)))?;
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| ReportError::Dataset(DatasetError::io(p, e)))?;
            serde_json::from_str(&text).map_err(|e| ReportError::Run {
                path: p.clone(),
                reason: e.to_string(),
            })
        })
        .collect()
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect(&path, out)?;
        } else if path.to_string_lossy().ends_with(SUMMARY_SUFFIX) {
            out.push(path);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

fn cell(v: Option<f64>, combo: bool) -> String {
    match v {
        Some(d) if is_highlighted(d, combo) => format!("**{d:.2}**"),
        Some(d) => format!("{d:.2}"),
        None => "-".into(),
    }
}

/// Renders the delta table. Rows keep their given order.
pub fn delta_table(rows: &[ReportRow], bleu: &[BleuScore], format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(
                "benchmark,model,mutation,n_cases,origin_full,origin_subset,mutated,delta_full_pp,delta_subset_pp\n",
            );
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    csv_field(&r.benchmark),
                    csv_field(&r.model),
                    csv_field(&r.mutation),
                    r.n_cases,
                    num(r.origin_full),
                    num(r.origin_subset),
                    num(r.mutated),
                    num(r.delta_full_pp()),
                    num(r.delta_subset_pp()),
                ));
            }
        }
        TableFormat::Markdown => {
            out.push_str("# Pass@1 under mutation\n\n");
            out.push_str(&format!(
                "Pass@1 in percent; deltas in percentage points. Drops of more than {SINGLE_THRESHOLD_PP:.0} pp \
                 (single mutations) or {COMBO_THRESHOLD_PP:.0} pp (combos) are in bold. `origin (subset)` is the \
                 original programs restricted to the cases the mutation applies to; `@all` rows restrict combos to \
                 cases where every constituent applied.\n\n"
            ));
            out.push_str(
                "| Benchmark | Model | Mutation | n | Origin (full) | Origin (subset) | Mutated | Δ full | Δ subset |\n",
            );
            out.push_str("|---|---|---|---:|---:|---:|---:|---:|---:|\n");
            for r in rows {
                let combo = r.combo();
                out.push_str(&format!(
                    "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                    r.benchmark,
                    r.model,
                    r.mutation,
                    r.n_cases,
                    cell(r.origin_full, false),
                    cell(r.origin_subset, false),
                    cell(r.mutated, false),
                    cell(r.delta_full_pp(), combo),
                    cell(r.delta_subset_pp(), combo),
                ));
            }
            if !bleu.is_empty() {
                out.push_str(&format!("\n## Similarity to the original programs\n\n{BLEU_VARIANT}.\n\n"));
                out.push_str("| Benchmark | Mutation | n | BLEU |\n|---|---|---:|---:|\n");
                for b in bleu {
                    out.push_str(&format!("| {} | {} | {} | {:.2} |\n", b.benchmark, b.mutation, b.n_cases, b.bleu));
                }
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Tidy per-model Pass@1 by mutation: the original condition over the full
/// set, and each mutation over its applied subset. Duplicated original
/// cells (one per mutation run) are collapsed.
pub fn distribution_csv(rows: &[ReportRow]) -> String {
    let mut cells: BTreeMap<(String, String, String), f64> = BTreeMap::new();
    let mut order = Vec::new();
    let mut put = |key: (String, String, String), v: f64| {
        if let std::collections::btree_map::Entry::Vacant(e) = cells.entry(key.clone()) {
            order.push(key);
            e.insert(v);
        }
    };
    for r in rows.iter().filter(|r| !r.mutation.ends_with(STRICT_SUFFIX)) {
        if let Some(v) = r.origin_full {
            put((r.benchmark.clone(), ORIGINAL.into(), r.model.clone()), v);
        }
        if let Some(v) = r.mutated {
            put((r.benchmark.clone(), r.mutation.clone(), r.model.clone()), v);
        }
    }
    let mut out = String::from("benchmark,mutation,model,pass1\n");
    for key in order {
        let v = cells[&key] / 100.0;
        out.push_str(&format!(
            "{},{},{},{v:.4}\n",
            csv_field(&key.0),
            csv_field(&key.1),
            csv_field(&key.2)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(mutation: &str, origin: f64, mutated: f64) -> ReportRow {
        ReportRow {
            benchmark: "codenet".into(),
            model: "m".into(),
            mutation: mutation.into(),
            n_cases: 10,
            origin_full: Some(origin),
            origin_subset: Some(origin),
            mutated: Some(mutated),
        }
    }

    #[test]
    fn tokens() {
        assert_eq!(
            tokenize("def f(x_1):\n    return x_1+10"),
            ["def", "f", "(", "x_1", ")", ":", "return", "x_1", "+", "10"]
        );
        assert_eq!(tokenize("a<=b"), ["a", "<", "=", "b"]);
    }

    #[test]
    fn bleu_bounds_and_identity() {
        let code = "def f(lists):\n    return lists[0]\n";
        assert_eq!(bleu(&[code], &[code]).unwrap(), 100.0);
        let disjoint = bleu(&["a b c d e"], &["v w x y z"]).unwrap();
        assert_eq!(disjoint, 0.0);
        assert!(matches!(bleu(&["a"], &[]), Err(ReportError::LengthMismatch { .. })));
        let renamed = sentence_bleu(code, "def f(var1):\n    return var1[0]\n");
        assert!(renamed > 0.0 && renamed < 100.0);
        // Short hypotheses are penalized.
        assert!(sentence_bleu("a b c d e f", "a b c d") < sentence_bleu("a b c d e f", "a b c d e f"));
    }

    #[test]
    fn frozen_sentence_bleu() {
        // 9 tokens, one swapped: p1..p4 = 8/9, (6+1)/(8+1), (4+1)/(7+1),
        // (2+1)/(6+1); no brevity penalty -> (15/81)^(1/4).
        let s = sentence_bleu("x = a + b * c - d", "x = a + e * c - d");
        let expected = 100.0 * (15.0_f64 / 81.0).powf(0.25);
        assert!((s - expected).abs() < 1e-9, "{s}");
        assert_eq!(format!("{s:.2}"), "65.60");
    }

    #[test]
    fn highlight_examples() {
        let single = row("constunfold", 65.80, 46.70);
        let d = single.delta_full_pp().unwrap();
        assert_eq!(format!("{d:.2}"), "-19.10");
        assert!(is_highlighted(d, single.combo()));
        let combo = row("fuv", 53.60, 31.28);
        let d = combo.delta_full_pp().unwrap();
        assert_eq!(format!("{d:.2}"), "-22.32");
        assert!(combo.combo() && is_highlighted(d, true));
        assert!(!is_highlighted(-19.10, true));
        assert!(!is_highlighted(0.0, false));
        assert!(is_combo("fuv@all") && !is_combo("varnorm1") && !is_combo(ORIGINAL));
    }

    #[test]
    fn tables() {
        let rows = vec![row("constunfold", 65.80, 46.70), row("fuv", 53.60, 40.0)];
        let md = delta_table(&rows, &[], TableFormat::Markdown);
        assert!(md.contains("| codenet | m | constunfold | 10 | 65.80 | 65.80 | 46.70 | **-19.10** | **-19.10** |"));
        assert!(md.contains("| -13.60 | -13.60 |"));
        let csv = delta_table(&rows, &[], TableFormat::Csv);
        assert_eq!(csv.lines().nth(1).unwrap(), "codenet,m,constunfold,10,65.80,65.80,46.70,-19.10,-19.10");
        assert!(!csv.contains("**"));
    }

    #[test]
    fn distribution_cardinality_and_precision() {
        let mut rows = Vec::new();
        for m in 0..10 {
            for mutation in ["varnorm1", "varnorm2", "constunfold", "for2while", "condaug"] {
                let mut r = row(mutation, 50.0 + m as f64, 40.123456);
                r.model = format!("model{m}");
                rows.push(r);
            }
        }
        let csv = distribution_csv(&rows);
        assert_eq!(csv.lines().count(), 1 + 60);
        let v: f64 = csv.lines().nth(2).unwrap().rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(format!("{v:.4}"), "0.4012");
    }

    proptest! {
        #[test]
        fn bleu_in_range(a in "[a-d (),+=]{0,40}", b in "[a-d (),+=]{0,40}") {
            let s = sentence_bleu(&a, &b);
            prop_assert!((0.0..=100.0).contains(&s));
            if !tokenize(&a).is_empty() {
                prop_assert_eq!(sentence_bleu(&a, &a), 100.0);
            }
        }
    }
}
