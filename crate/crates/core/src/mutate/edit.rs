//! Edit log entries and their replay.

use serde::{Deserialize, Serialize};

use super::MutationKind;
use crate::syntax::Span;

/// One text replacement made by an operator, relative to that operator's
/// input text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub span: Span,
    pub old: String,
    pub new: String,
    pub op: MutationKind,
}

/// A candidate site an operator declined to touch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub span: Span,
    pub reason: String,
    pub op: MutationKind,
}

impl Serialize for Span {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (self.start, self.end).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (start, end) = <(usize, usize)>::deserialize(d)?;
        Ok(Span::new(start, end))
    }
}

/// Applies non-overlapping edits (all relative to `text`) in one pass.
pub fn apply_edits(text: &str, edits: &[Edit]) -> String {
    let mut sorted: Vec<&Edit> = edits.iter().collect();
    sorted.sort_by_key(|e| (e.span.start, e.span.end));
    let mut out = String::with_capacity(text.len() + 64);
    let mut pos = 0;
    for e in sorted {
        debug_assert!(e.span.start >= pos, "overlapping edits");
        out.push_str(&text[pos..e.span.start]);
        out.push_str(&e.new);
        pos = e.span.end;
    }
    out.push_str(&text[pos..]);
    out
}

/// Replays a (possibly composed) edit log over the original text.
///
/// Consecutive edits with the same operator tag form one group whose spans
/// refer to the output of the previous group.
pub fn replay(original: &str, edits: &[Edit]) -> String {
    let mut text = original.to_string();
    let mut i = 0;
    while i < edits.len() {
        let op = edits[i].op;
        let mut j = i;
        while j < edits.len() && edits[j].op == op {
            j += 1;
        }
        text = apply_edits(&text, &edits[i..j]);
        i = j;
    }
    text
}
