//! Importance of a disclosure in its thread: context assembly, gold aggregation
//! and model rating.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{build_prompt, clean_rationale, json_objects, TemplateError, TemplateId};
use crate::document::{DocKind, Thread};
use crate::llm::{CachePolicy, LlmClient, LlmError};
use crate::span::{DisclosureSpan, SpanError};
use crate::text::{char_len, char_slice};

/// Rendered in place of `{post_empty_explaination}` when the post body is missing.
pub const POST_EMPTY_NOTE: &str = "Note: the post body is empty; rely on the title.";
pub const DISCLOSURE_OPEN: &str = "<disclosure>";
pub const DISCLOSURE_CLOSE: &str = "</disclosure>";
/// Rating attempts before giving up on an unparseable answer.
pub const RATING_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ImportanceLevel {
    Low,
    Moderate,
    High,
}

impl ImportanceLevel {
    pub const ALL: [ImportanceLevel; 3] = [ImportanceLevel::Low, ImportanceLevel::Moderate, ImportanceLevel::High];

    pub fn as_str(self) -> &'static str {
        match self {
            ImportanceLevel::Low => "Low",
            ImportanceLevel::Moderate => "Moderate",
            ImportanceLevel::High => "High",
        }
    }
}

impl fmt::Display for ImportanceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ImportanceLevel {
    type Err = ImportanceError;

    /// Case-insensitive; accepts a trailing "importance" and surrounding quotes or punctuation.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s
            .trim()
            .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
            .to_ascii_lowercase();
        let t = t.strip_suffix("importance").unwrap_or(&t).trim();
        match t {
            "low" => Ok(ImportanceLevel::Low),
            "moderate" | "medium" => Ok(ImportanceLevel::Moderate),
            "high" => Ok(ImportanceLevel::High),
            _ => Err(ImportanceError::UnknownLevel(s.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum ImportanceError {
    #[error("unknown importance level `{0}`")]
    UnknownLevel(String),
    #[error("document {0} is not in the thread")]
    NotInThread(String),
    #[error(transparent)]
    Span(#[from] SpanError),
    #[error("expected exactly 3 annotations, got {0}")]
    AnnotationCount(usize),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("no importance level in rater output after {attempts} attempts: {last:?}")]
    Unparseable { attempts: usize, last: String },
}

/// Majority of three annotations, or `Moderate` when all three differ.
pub fn aggregate_gold(levels: [ImportanceLevel; 3]) -> ImportanceLevel {
    let [a, b, c] = levels;
    if a == b || a == c {
        a
    } else if b == c {
        b
    } else {
        ImportanceLevel::Moderate
    }
}

/// As `aggregate_gold`, for annotation lists read from a corpus.
pub fn aggregate_gold_slice(levels: &[ImportanceLevel]) -> Result<ImportanceLevel, ImportanceError> {
    let arr: [ImportanceLevel; 3] = levels
        .try_into()
        .map_err(|_| ImportanceError::AnnotationCount(levels.len()))?;
    Ok(aggregate_gold(arr))
}

/// What a rater sees for one span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingContext {
    pub location: DocKind,
    pub title: Option<String>,
    pub post_body: Option<String>,
    pub comment: Option<String>,
    pub parent_comment: Option<String>,
    /// The containing unit with the span wrapped in disclosure markers.
    pub marked_text: String,
    pub disclosure: String,
}

pub fn mark_disclosure(text: &str, start: usize, end: usize) -> Result<String, SpanError> {
    let len = char_len(text);
    let oob = SpanError::OutOfBounds { start, end, len };
    let before = char_slice(text, 0, start).ok_or(oob.clone())?;
    let inner = char_slice(text, start, end).ok_or(oob.clone())?;
    let after = char_slice(text, end, len).ok_or(oob)?;
    Ok(format!("{before}{DISCLOSURE_OPEN}{inner}{DISCLOSURE_CLOSE}{after}"))
}

fn non_empty(s: &str) -> Option<String> {
    (!s.trim().is_empty()).then(|| s.to_string())
}

/// Title and body for post spans; the comment and its parent comment for
/// comment spans, with the post fields kept for the prompt.
pub fn assemble_context(span: &DisclosureSpan, thread: &Thread) -> Result<RatingContext, ImportanceError> {
    let doc = thread
        .get(&span.doc_id)
        .ok_or_else(|| ImportanceError::NotInThread(span.doc_id.clone()))?;
    span.validate_against(doc)?;
    let marked = mark_disclosure(&doc.text, span.start, span.end)?;
    let title = thread.title().and_then(|d| non_empty(&d.text));
    let body = thread.body().and_then(|d| non_empty(&d.text));
    let mut ctx = RatingContext {
        location: doc.kind,
        title,
        post_body: body,
        comment: None,
        parent_comment: None,
        marked_text: marked.clone(),
        disclosure: span.text.clone(),
    };
    match doc.kind {
        DocKind::Title => ctx.title = Some(marked),
        DocKind::Body => ctx.post_body = Some(marked),
        DocKind::Comment => {
            ctx.comment = Some(marked);
            ctx.parent_comment = thread
                .parent_of(doc)
                .map(|p| p.text.clone());
        }
    }
    Ok(ctx)
}

/// Template bindings for the rating prompts.
pub fn rating_bindings(ctx: &RatingContext) -> BTreeMap<String, String> {
    let none = || "None".to_string();
    let comment = match (&ctx.comment, &ctx.parent_comment) {
        (Some(c), Some(p)) => format!("{p}\n  * Reply: {c}"),
        (Some(c), None) => c.clone(),
        (None, _) => none(),
    };
    let note = if ctx.post_body.is_none() { POST_EMPTY_NOTE } else { "" };
    BTreeMap::from([
        ("title".to_string(), ctx.title.clone().unwrap_or_else(none)),
        ("post".to_string(), ctx.post_body.clone().unwrap_or_else(none)),
        ("comment".to_string(), comment),
        ("disclosure".to_string(), ctx.disclosure.clone()),
        ("post_empty_explaination".to_string(), note.to_string()),
    ])
}

/// Reads a level from rater output: an `{"Importance": ..}` object anywhere in
/// the text (prose before it is the rationale), or a bare level word.
pub fn parse_importance(raw: &str) -> Option<(ImportanceLevel, Option<String>)> {
    for (at, map) in json_objects(raw) {
        let value = map
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case("importance"))
            .and_then(|(_, v)| v.as_str());
        if let Some(level) = value.and_then(|v| v.parse().ok()) {
            return Some((level, clean_rationale(&raw[..at], &[])));
        }
    }
    let trimmed = raw.trim();
    if let Ok(level) = trimmed.parse() {
        return Some((level, None));
    }
    let last = trimmed.lines().rev().find(|l| !l.trim().is_empty())?;
    let label = last.trim().trim_start_matches(|c: char| c == '*' || c.is_whitespace());
    let value = label
        .split_once(':')
        .filter(|(k, _)| k.trim().to_ascii_lowercase().contains("importance"))
        .map_or(label, |(_, v)| v);
    value.parse().ok().map(|l| {
        let rest = &trimmed[..trimmed.len() - last.len()];
        (l, non_empty(rest.trim()))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportanceRating {
    pub span: DisclosureSpan,
    pub level: ImportanceLevel,
    pub rationale: Option<String>,
}

/// Rating record as written to JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub doc_id: String,
    pub span_start: usize,
    pub span_end: usize,
    pub level: ImportanceLevel,
    pub rationale: Option<String>,
}

impl From<&ImportanceRating> for RatingRecord {
    fn from(r: &ImportanceRating) -> Self {
        Self {
            doc_id: r.span.doc_id.clone(),
            span_start: r.span.start,
            span_end: r.span.end,
            level: r.level,
            rationale: r.rationale.clone(),
        }
    }
}

/// Prompts the rater and parses its level, re-asking (bypassing the cache) when
/// the answer has no recognizable level.
pub fn rate_importance(
    span: &DisclosureSpan,
    ctx: &RatingContext,
    rater: &LlmClient,
    with_thought: bool,
) -> Result<ImportanceRating, ImportanceError> {
    let id = if with_thought {
        TemplateId::ImportanceRateThought
    } else {
        TemplateId::ImportanceRate
    };
    let prompt = build_prompt(id, &rating_bindings(ctx))?;
    let mut last = String::new();
    for attempt in 0..RATING_ATTEMPTS {
        let policy = if attempt == 0 { CachePolicy::Default } else { CachePolicy::Refresh };
        last = rater.complete(&rater.request(id.as_str(), prompt.clone(), 0.0), policy)?;
        if let Some((level, rationale)) = parse_importance(&last) {
            return Ok(ImportanceRating {
                span: span.clone(),
                level,
                rationale,
            });
        }
        log::warn!("rating attempt {} unparseable", attempt + 1);
    }
    Err(ImportanceError::Unparseable {
        attempts: RATING_ATTEMPTS,
        last,
    })
}

/// `assemble_context` followed by `rate_importance`.
pub fn rate_span(
    span: &DisclosureSpan,
    thread: &Thread,
    rater: &LlmClient,
    with_thought: bool,
) -> Result<ImportanceRating, ImportanceError> {
    let ctx = assemble_context(span, thread)?;
    rate_importance(span, &ctx, rater, with_thought)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Document;
    use crate::llm::{FixedProvider, RetryPolicy, ScriptedProvider};
    use crate::taxonomy::Category;
    use std::sync::Arc;
    use ImportanceLevel::*;

    fn thread() -> Thread {
        Thread::new(
            "t",
            vec![
                Document::title("t-title", "t", "Moving abroad?"),
                Document::body("t-body", "t", "I live in Ohio and want to move."),
                Document::comment("c1", "t", "I moved from Texas last year.", None),
                Document::comment("c2", "t", "My wife and I did the same.", Some("c1".into())),
                Document::comment("c3", "t", "Sibling comment.", None),
                Document::comment("c4", "t", "Deeper reply.", Some("c2".into())),
            ],
        )
        .unwrap()
    }

    #[test]
    fn aggregation_rules() {
        assert_eq!(aggregate_gold([Low, Low, High]), Low);
        assert_eq!(aggregate_gold([Low, Moderate, High]), Moderate);
        assert_eq!(aggregate_gold([High, High, High]), High);
        assert_eq!(aggregate_gold([High, Low, Low]), Low);
        assert!(aggregate_gold_slice(&[Low, Low]).is_err());
    }

    #[test]
    fn aggregation_is_permutation_invariant() {
        for a in ImportanceLevel::ALL {
            for b in ImportanceLevel::ALL {
                for c in ImportanceLevel::ALL {
                    let base = aggregate_gold([a, b, c]);
                    for p in [[a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                        assert_eq!(aggregate_gold(p), base);
                    }
                }
            }
        }
    }

    #[test]
    fn body_context() {
        let t = thread();
        let span = DisclosureSpan::new(t.get("t-body").unwrap(), 0, 14, Category::Location).unwrap();
        let ctx = assemble_context(&span, &t).unwrap();
        assert_eq!(ctx.title.as_deref(), Some("Moving abroad?"));
        assert_eq!(ctx.post_body.as_deref(), Some("<disclosure>I live in Ohio</disclosure> and want to move."));
        assert_eq!(ctx.comment, None);
    }

    #[test]
    fn top_level_and_nested_comment_context() {
        let t = thread();
        let top = DisclosureSpan::new(t.get("c1").unwrap(), 0, 20, Category::Location).unwrap();
        let ctx = assemble_context(&top, &t).unwrap();
        assert_eq!(ctx.parent_comment, None);
        assert!(ctx.comment.as_deref().unwrap().starts_with("<disclosure>I moved from Texas"));
        assert!(ctx.title.is_some() && ctx.post_body.is_some());

        let nested = DisclosureSpan::new(t.get("c2").unwrap(), 0, 7, Category::WifeGF).unwrap();
        let ctx = assemble_context(&nested, &t).unwrap();
        assert_eq!(ctx.parent_comment.as_deref(), Some("I moved from Texas last year."));
        let b = rating_bindings(&ctx);
        assert!(!b["comment"].contains("Sibling") && !b["comment"].contains("Deeper"));
        assert!(b["comment"].contains("<disclosure>My wife</disclosure>"));
    }

    #[test]
    fn empty_body_note() {
        let t = Thread::new("t", vec![Document::title("a", "t", "I am 30 and single")]).unwrap();
        let span = DisclosureSpan::new(t.get("a").unwrap(), 0, 7, Category::Age).unwrap();
        let b = rating_bindings(&assemble_context(&span, &t).unwrap());
        assert_eq!(b["post_empty_explaination"], POST_EMPTY_NOTE);
        assert_eq!(b["post"], "None");
        assert_eq!(b["title"], "<disclosure>I am 30</disclosure> and single");
    }

    #[test]
    fn foreign_span_rejected() {
        let other = Document::body("x", "other", "I am 30");
        let span = DisclosureSpan::new(&other, 0, 7, Category::Age).unwrap();
        assert!(matches!(assemble_context(&span, &thread()), Err(ImportanceError::NotInThread(_))));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_importance(r#"{"Importance": "High"}"#), Some((High, None)));
        assert_eq!(
            parse_importance(r#"reasoning... {"Importance": "Moderate"}"#),
            Some((Moderate, Some("reasoning...".into())))
        );
        assert_eq!(parse_importance("low"), Some((Low, None)));
        assert_eq!(parse_importance("High Importance."), Some((High, None)));
        assert_eq!(parse_importance("Because.\nImportance: low"), Some((Low, Some("Because.".into()))));
        assert_eq!(parse_importance("I cannot decide"), None);
        assert_eq!(parse_importance(r#"{"importance": "HIGH"}"#), Some((High, None)));
    }

    #[test]
    fn rating_with_stub() {
        let t = thread();
        let span = DisclosureSpan::new(t.get("c1").unwrap(), 0, 20, Category::Location).unwrap();
        let c = LlmClient::new(Arc::new(FixedProvider::new(r#"{"Importance": "High"}"#)), "m");
        assert_eq!(rate_span(&span, &t, &c, true).unwrap().level, High);
    }

    #[test]
    fn unparseable_is_an_error_after_retries() {
        let t = thread();
        let span = DisclosureSpan::new(t.get("c1").unwrap(), 0, 20, Category::Location).unwrap();
        let p = Arc::new(ScriptedProvider::new([]).with_fallback("no idea"));
        let c = LlmClient::new(p.clone(), "m").with_retry(RetryPolicy::no_delay());
        assert!(matches!(
            rate_span(&span, &t, &c, false),
            Err(ImportanceError::Unparseable { attempts: 3, .. })
        ));
        assert_eq!(p.calls(), 3);
    }

    #[test]
    fn record_schema() {
        let t = thread();
        let span = DisclosureSpan::new(t.get("c1").unwrap(), 0, 20, Category::Location).unwrap();
        let r = ImportanceRating {
            span,
            level: Low,
            rationale: None,
        };
        let v = serde_json::to_value(RatingRecord::from(&r)).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"doc_id": "c1", "span_start": 0, "span_end": 20, "level": "Low", "rationale": null})
        );
    }
}
