//! Answer extraction from raw completions.

use crate::dataset::TaskKind;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("could not extract an answer: {0}")]
pub struct ExtractionFailure(pub String);

/// Output prediction: the right-hand side of the first completed
/// `assert ... == <answer>` line, without a trailing `# done` comment. A
/// bare continuation of the prompt (`<answer> # done`) is accepted too.
/// Translation: the first fenced code block, else the whole completion.
pub fn extract_answer(task: TaskKind, completion: &str) -> Result<String, ExtractionFailure> {
    match task {
        TaskKind::OutputPrediction => extract_assert(completion),
        TaskKind::Translation => Ok(extract_code_block(completion)),
    }
}

fn extract_assert(completion: &str) -> Result<String, ExtractionFailure> {
    for line in completion.lines() {
        let line = line.trim();
        let Some(rest) = line.strip_prefix("assert") else { continue };
        if !rest.starts_with([' ', '(', '\t']) {
            continue;
        }
        let rest = strip_comment(rest);
        if let Some(i) = top_level_eq(rest) {
            let answer = rest[i + 2..].trim();
            if !answer.is_empty() {
                return Ok(answer.to_string());
            }
        }
    }
    // Continuation of the prompt's dangling `assert f(...) ==`.
    let first = completion.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with("```"));
    if let Some(line) = first {
        if line.contains("# done") {
            let answer = strip_comment(line).trim().trim_start_matches("==").trim();
            if !answer.is_empty() {
                return Ok(answer.to_string());
            }
        }
    }
    Err(ExtractionFailure("no completed assert statement".into()))
}

/// Scans Python-ish text, calling `f(byte_index, char, depth)` for every
/// character outside string literals.
fn scan(text: &str, mut f: impl FnMut(usize, char, i32) -> bool) {
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in text.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            _ => {}
        }
        if !f(i, c, depth) {
            return;
        }
    }
}

fn strip_comment(text: &str) -> &str {
    let mut cut = text.len();
    scan(text, |i, c, _| {
        if c == '#' {
            cut = i;
            false
        } else {
            true
        }
    });
    &text[..cut]
}

fn top_level_eq(text: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut found = None;
    scan(text, |i, c, depth| {
        let is_eq = c == '='
            && depth == 0
            && bytes.get(i + 1) == Some(&b'=')
            && (i == 0 || !matches!(bytes[i - 1], b'=' | b'!' | b'<' | b'>'));
        if is_eq {
            found = Some(i);
            false
        } else {
            true
        }
    });
    found
}

fn extract_code_block(completion: &str) -> String {
    if let Some(start) = completion.find("```") {
        let after = &completion[start + 3..];
        // Skip the info string (language tag) line.
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        let end = body.find("```").unwrap_or(body.len());
        return body[..end].trim_end_matches(['\n', '\r']).to_string();
    }
    completion.trim().to_string()
}
