use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no JSON object with span keys found")]
    NoJson,
    #[error("expected keys span 1..span {expected}, found {found:?}")]
    WrongKeys { expected: usize, found: Vec<String> },
    #[error("empty value for `{0}`")]
    EmptyValue(String),
    #[error("empty output")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCandidates {
    pub candidates: Vec<String>,
    pub rationale: Option<String>,
}

/// Every JSON object that starts in `raw`, with its byte offset.
pub(crate) fn json_objects(raw: &str) -> Vec<(usize, Map<String, Value>)> {
    let mut out = Vec::new();
    let mut i = 0;
    while let Some(pos) = raw[i..].find('{') {
        let at = i + pos;
        let mut stream = serde_json::Deserializer::from_str(&raw[at..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(map))) => {
                out.push((at, map));
                i = at + stream.byte_offset();
            }
            _ => i = at + 1,
        }
    }
    out
}

fn is_span_key(k: &str) -> bool {
    k.strip_prefix("span ").is_some_and(|n| n.parse::<usize>().is_ok())
}

/// Text before the answer, without code fences or a leading "Rationale:" label.
pub(crate) fn clean_rationale(prefix: &str, trailing_labels: &[&str]) -> Option<String> {
    let mut s = prefix.trim_end();
    loop {
        let before = s;
        if let Some(rest) = s.strip_suffix("```json").or_else(|| s.strip_suffix("```")) {
            s = rest.trim_end();
        }
        for label in trailing_labels {
            if let Some(rest) = s.strip_suffix(label) {
                s = rest.trim_end();
            }
        }
        if s == before {
            break;
        }
    }
    let s = s.trim_start();
    let s = s.strip_prefix("Rationale:").unwrap_or(s).trim();
    (!s.is_empty()).then(|| s.to_string())
}

/// Extracts `{"span 1": .., "span N": ..}` from model output, tolerating prose
/// and code fences around it. Text before the object becomes the rationale.
pub fn parse_candidates(raw: &str, expect: usize) -> Result<ParsedCandidates, ParseError> {
    let objects = json_objects(raw);
    let (at, map) = objects
        .into_iter()
        .find(|(_, m)| !m.is_empty() && m.keys().all(|k| is_span_key(k)))
        .ok_or(ParseError::NoJson)?;
    let wanted: Vec<String> = (1..=expect).map(|i| format!("span {i}")).collect();
    if map.len() != expect || !wanted.iter().all(|k| map.contains_key(k)) {
        return Err(ParseError::WrongKeys {
            expected: expect,
            found: map.keys().cloned().collect(),
        });
    }
    let mut candidates = Vec::with_capacity(expect);
    for k in &wanted {
        let v = map[k].as_str().map(str::trim).unwrap_or("");
        if v.is_empty() {
            return Err(ParseError::EmptyValue(k.clone()));
        }
        candidates.push(v.to_string());
    }
    Ok(ParsedCandidates {
        candidates,
        rationale: clean_rationale(&raw[..at], &["Generalized Spans:"]),
    })
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    for (open, close) in [('"', '"'), ('\'', '\''), ('\u{201c}', '\u{201d}')] {
        if let Some(inner) = s.strip_prefix(open).and_then(|r| r.strip_suffix(close)) {
            return inner.trim();
        }
    }
    s
}

/// Parses a one-candidate answer: a bare span, a `Generalized Span:` line after
/// a rationale, or a one-key span object.
pub fn parse_single_candidate(raw: &str) -> Result<ParsedCandidates, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    if let Ok(p) = parse_candidates(raw, 1) {
        return Ok(p);
    }
    let (candidate, rationale) = match raw.rfind("Generalized Span:") {
        Some(at) => {
            let after = &raw[at + "Generalized Span:".len()..];
            let line = after.trim_start().lines().next().unwrap_or("");
            (unquote(line).to_string(), clean_rationale(&raw[..at], &[]))
        }
        None => {
            let lines: Vec<&str> = raw.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
            let last = lines.last().copied().unwrap_or("");
            let rest = lines[..lines.len().saturating_sub(1)].join("\n");
            (unquote(last).to_string(), clean_rationale(&rest, &[]))
        }
    };
    if candidate.is_empty() {
        return Err(ParseError::EmptyValue("span 1".into()));
    }
    Ok(ParsedCandidates {
        candidates: vec![candidate],
        rationale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationale_then_json() {
        let p = parse_candidates(r#"Rationale text... {"span 1": "a", "span 2": "b", "span 3": "c"}"#, 3).unwrap();
        assert_eq!(p.candidates, ["a", "b", "c"]);
        assert_eq!(p.rationale.as_deref(), Some("Rationale text..."));
    }

    #[test]
    fn wrong_count() {
        assert!(matches!(
            parse_candidates(r#"{"span 1": "a"}"#, 3),
            Err(ParseError::WrongKeys { expected: 3, .. })
        ));
        assert!(matches!(
            parse_candidates(r#"{"span 1": "a", "span 2": "b", "span 4": "c"}"#, 3),
            Err(ParseError::WrongKeys { .. })
        ));
    }

    #[test]
    fn code_fence() {
        let raw = "Because it is specific.\n```json\n{\"span 1\": \"x\", \"span 2\": \"y\", \"span 3\": \"z\"}\n```\n";
        let p = parse_candidates(raw, 3).unwrap();
        assert_eq!(p.candidates, ["x", "y", "z"]);
        assert_eq!(p.rationale.as_deref(), Some("Because it is specific."));
    }

    #[test]
    fn skips_unrelated_objects() {
        let raw = r#"Note {"other": 1} then Generalized Spans: {"span 1": "x", "span 2": "y", "span 3": "z"}"#;
        let p = parse_candidates(raw, 3).unwrap();
        assert_eq!(p.candidates, ["x", "y", "z"]);
        assert_eq!(p.rationale.as_deref(), Some(r#"Note {"other": 1} then"#));
    }

    #[test]
    fn empty_value_and_no_json() {
        assert_eq!(
            parse_candidates(r#"{"span 1": "a", "span 2": " ", "span 3": "c"}"#, 3),
            Err(ParseError::EmptyValue("span 2".into()))
        );
        assert_eq!(parse_candidates("no json here {broken", 3), Err(ParseError::NoJson));
    }

    #[test]
    fn single_forms() {
        assert_eq!(parse_single_candidate("my partner").unwrap().candidates, ["my partner"]);
        assert_eq!(parse_single_candidate("\"my partner\"\n").unwrap().candidates, ["my partner"]);
        let p = parse_single_candidate("It names a person.\nGeneralized Span: \"my partner\"").unwrap();
        assert_eq!(p.candidates, ["my partner"]);
        assert_eq!(p.rationale.as_deref(), Some("It names a person."));
        assert_eq!(parse_single_candidate(r#"{"span 1": "x"}"#).unwrap().candidates, ["x"]);
        assert_eq!(parse_single_candidate("  "), Err(ParseError::Empty));
    }
}
