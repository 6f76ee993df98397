//! Pull a JSON document out of a chat response.

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("no parseable JSON object in response: {}", preview(.raw))]
pub struct ExtractionError {
    pub raw: String,
}

fn preview(raw: &str) -> String {
    const MAX: usize = 120;
    match raw.char_indices().nth(MAX) {
        Some((i, _)) => format!("{}...", &raw[..i]),
        None => raw.to_string(),
    }
}

/// Parse `response` as JSON. Failing that, try the body of each fenced code
/// block, then each balanced top-level `{...}` block, in order.
pub fn extract_json_payload(response: &str) -> Result<Value, ExtractionError> {
    if let Ok(v) = serde_json::from_str::<Value>(response.trim()) {
        return Ok(v);
    }
    for block in fenced_blocks(response) {
        if let Ok(v) = serde_json::from_str::<Value>(block.trim()) {
            return Ok(v);
        }
        if let Some(v) = first_object(block) {
            return Ok(v);
        }
    }
    first_object(response).ok_or_else(|| ExtractionError { raw: response.to_string() })
}

fn first_object(text: &str) -> Option<Value> {
    brace_blocks(text)
        .into_iter()
        .find_map(|b| serde_json::from_str::<Value>(b).ok())
}

/// Bodies of ```-fenced blocks, with any info string dropped.
fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                out.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => break,
        }
    }
    out
}

/// Balanced top-level `{...}` spans, ignoring braces inside string literals.
fn brace_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0usize, 0usize);
    let (mut in_string, mut escaped) = (false, false);
    for (i, c) in text.char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' if depth > 0 => in_string = true,
            '{' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            '}' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    out.push(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    out
}
