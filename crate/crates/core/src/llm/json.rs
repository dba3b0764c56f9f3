//! Lenient extraction of JSON objects and SQL blocks from model output.

use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum JsonBlockError {
    #[error("no JSON object found in response")]
    NoJsonFound,
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
}

/// Extracts the first fenced `json` block, else the first brace-balanced
/// object, and parses it as a JSON object.
///
/// When strict parsing fails the text is repaired: trailing commas are
/// dropped, commas missing between members on separate lines are inserted,
/// and a string left open at the end of the last member is closed.
pub fn parse_json_block(response: &str) -> Result<Map<String, Value>, JsonBlockError> {
    let candidate = fenced(response, "json")
        .and_then(|body| balanced_object(body).or(Some(body)))
        .or_else(|| balanced_object(response))
        .ok_or(JsonBlockError::NoJsonFound)?;
    let candidate = candidate.trim();
    if !candidate.starts_with('{') {
        return Err(JsonBlockError::NoJsonFound);
    }
    let strict = serde_json::from_str::<Value>(candidate);
    let value = match strict {
        Ok(v) => v,
        Err(first) => serde_json::from_str::<Value>(&repair(candidate))
            .map_err(|_| JsonBlockError::MalformedJson(first.to_string()))?,
    };
    match value {
        Value::Object(map) => Ok(map),
        other => Err(JsonBlockError::MalformedJson(format!("expected an object, got {other}"))),
    }
}

/// Body of the first SQL code block: a `sql` fence, else any fence.
pub fn extract_sql_block(response: &str) -> Option<String> {
    fenced(response, "sql")
        .or_else(|| fenced(response, ""))
        .map(|s| s.trim().trim_end_matches(';').trim().to_string())
        .filter(|s| !s.is_empty())
}

fn fenced<'a>(text: &'a str, lang: &str) -> Option<&'a str> {
    let mut rest = text;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        let line_end = after.find('\n').unwrap_or(after.len());
        let tag = after[..line_end].trim();
        let body_start = (line_end + 1).min(after.len());
        let body = &after[body_start..];
        let end = body.find("```")?;
        if lang.is_empty() || tag.eq_ignore_ascii_case(lang) {
            return Some(&body[..end]);
        }
        rest = &body[end + 3..];
    }
    None
}

fn balanced_object(text: &str) -> Option<&str> {
    let bytes = text.as_bytes();
    let mut search = 0;
    while let Some(off) = text[search..].find('{') {
        let start = search + off;
        let mut depth = 0i32;
        let mut in_str = false;
        let mut escaped = false;
        for (i, &b) in bytes.iter().enumerate().skip(start) {
            if in_str {
                match (escaped, b) {
                    (true, _) => escaped = false,
                    (false, b'\\') => escaped = true,
                    (false, b'"') => in_str = false,
                    _ => {}
                }
                continue;
            }
            match b {
                b'"' => in_str = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(&text[start..=i]);
                    }
                }
                _ => {}
            }
        }
        search = start + 1;
    }
    None
}

fn repair(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 8);
    let chars: Vec<char> = text.chars().collect();
    let mut in_str = false;
    let mut escaped = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if in_str {
            if c == '\n' && !escaped {
                let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
                if matches!(next, Some('}') | Some(']')) {
                    out.push('"');
                    in_str = false;
                    continue;
                }
            }
            out.push(c);
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_str = false,
                _ => {}
            }
            i += 1;
            continue;
        }
        if c == '"' {
            in_str = true;
        }
        if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                i += 1;
                continue;
            }
        }
        if c == '\n' {
            let prev = out.trim_end().chars().last();
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            let ends_value = matches!(prev, Some('"' | '}' | ']' | 'e' | 'l')) || prev.is_some_and(|p| p.is_ascii_digit());
            if ends_value && next == Some(&'"') {
                out.push(',');
            }
        }
        out.push(c);
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn prose_around_fence() {
        let r = "Sure.\n```json\n{\"correct\": false, \"explanation\": \"x\"}\n```\nDone.";
        let m = parse_json_block(r).unwrap();
        assert_eq!(Value::Object(m), json!({"correct": false, "explanation": "x"}));
    }

    #[test]
    fn bare_object_and_braces_in_strings() {
        let r = "answer: {\"a\": \"}{\", \"b\": {\"c\": 1}} trailing";
        let m = parse_json_block(r).unwrap();
        assert_eq!(Value::Object(m), json!({"a": "}{", "b": {"c": 1}}));
    }

    #[test]
    fn missing_and_trailing_commas() {
        let r = "{\n  \"insufficient_evidence\": true\n  \"explanation\": \"why\",\n}";
        let m = parse_json_block(r).unwrap();
        assert_eq!(m["insufficient_evidence"], json!(true));
        assert_eq!(m["explanation"], json!("why"));
    }

    #[test]
    fn unterminated_last_string() {
        let r = "```json\n{\n  \"violates_evidence\": true\n  \"explanation\": \"open\n}\n```";
        let m = parse_json_block(r).unwrap();
        assert_eq!(Value::Object(m), json!({"violates_evidence": true, "explanation": "open"}));
    }

    #[test]
    fn failures() {
        assert_eq!(parse_json_block("no json here"), Err(JsonBlockError::NoJsonFound));
        assert!(matches!(parse_json_block("{\"a\": }"), Err(JsonBlockError::MalformedJson(_))));
    }

    #[test]
    fn sql_blocks() {
        assert_eq!(extract_sql_block("x\n```sql\nSELECT 1;\n```").as_deref(), Some("SELECT 1"));
        assert_eq!(extract_sql_block("```\nSELECT 2\n```").as_deref(), Some("SELECT 2"));
        assert_eq!(extract_sql_block("SELECT 3"), None);
    }
}
