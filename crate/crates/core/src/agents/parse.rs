//! Boxed-action extraction.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no boxed action found")]
    NoBox,
    #[error("boxed action is not closed")]
    Unclosed,
}

const MARKERS: [&str; 2] = ["\\boxed{", "\\box{"];

/// Content of the last `\boxed{...}` or `\box{...}` in `raw`, trimmed.
///
/// Nested braces inside the box are matched, and a single `\text{...}`
/// wrapper around the whole content is removed. Any number of leading
/// backslashes before the marker is accepted, so the doubled `\\box{}`
/// spelling of the game prompts parses too.
pub fn parse_action(raw: &str) -> Result<String, ParseError> {
    let start = MARKERS
        .iter()
        .filter_map(|m| raw.rfind(m).map(|i| i + m.len()))
        .max()
        .ok_or(ParseError::NoBox)?;
    let body = &raw[start..];
    let mut depth = 1usize;
    let mut end = None;
    for (i, ch) in body.char_indices() {
        match ch {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    end = Some(i);
                    break;
                }
            }
            _ => {}
        }
    }
    let inner = body[..end.ok_or(ParseError::Unclosed)?].trim();
    Ok(strip_text(inner).trim().to_string())
}

fn strip_text(s: &str) -> &str {
    s.strip_prefix("\\text{")
        .and_then(|rest| rest.strip_suffix('}'))
        .filter(|inner| !inner.contains('}'))
        .unwrap_or(s)
}

/// Wraps an action the way the baseline agents emit it.
pub fn boxed(action: &str) -> String {
    format!("\\boxed{{{action}}}")
}
