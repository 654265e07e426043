//! Disclosure spans, span arithmetic, and in-place text edits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::Document;
use crate::taxonomy::Category;
use crate::text::{byte_offset, char_len, char_slice};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpanError {
    #[error("range [{start}, {end}) is invalid for text of length {len}")]
    OutOfBounds { start: usize, end: usize, len: usize },
    #[error("span text {expected:?} does not match document text {found:?} at [{start}, {end})")]
    SnapshotMismatch {
        start: usize,
        end: usize,
        expected: String,
        found: String,
    },
    #[error("span belongs to document `{span_doc}`, not `{doc}`")]
    WrongDocument { span_doc: String, doc: String },
}

/// A half-open `[start, end)` range of code points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpanRange {
    pub start: usize,
    pub end: usize,
}

impl SpanRange {
    /// Fails unless `start < end`.
    pub fn new(start: usize, end: usize) -> Option<Self> {
        (start < end).then_some(Self { start, end })
    }

    pub(crate) const fn new_unchecked(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, other: &SpanRange) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

/// Size of the intersection of two half-open ranges. Touching ranges share nothing.
pub fn overlap_len(a: SpanRange, b: SpanRange) -> usize {
    let lo = a.start.max(b.start);
    let hi = a.end.min(b.end);
    hi.saturating_sub(lo)
}

/// True when either range contains the other; equal ranges contain each other.
pub fn contains_relation(a: SpanRange, b: SpanRange) -> bool {
    a.contains(&b) || b.contains(&a)
}

/// Replaces `text[start..end)` with `replacement`, returning the new text and the
/// end offset of the replacement within it.
pub fn apply_edit(
    text: &str,
    start: usize,
    end: usize,
    replacement: &str,
) -> Result<(String, usize), SpanError> {
    let len = char_len(text);
    if start >= end || end > len {
        return Err(SpanError::OutOfBounds { start, end, len });
    }
    let b0 = byte_offset(text, start).expect("checked");
    let b1 = byte_offset(text, end).expect("checked");
    let mut out = String::with_capacity(text.len() - (b1 - b0) + replacement.len());
    out.push_str(&text[..b0]);
    out.push_str(replacement);
    out.push_str(&text[b1..]);
    Ok((out, start + char_len(replacement)))
}

/// Like [`apply_edit`] but first checks the span's text snapshot, so edits computed
/// against an older draft are rejected instead of corrupting the new one.
pub fn apply_span_edit(
    text: &str,
    span: &DisclosureSpan,
    replacement: &str,
) -> Result<(String, usize), SpanError> {
    let found = char_slice(text, span.start, span.end).ok_or(SpanError::OutOfBounds {
        start: span.start,
        end: span.end,
        len: char_len(text),
    })?;
    if found != span.text {
        return Err(SpanError::SnapshotMismatch {
            start: span.start,
            end: span.end,
            expected: span.text.clone(),
            found: found.to_string(),
        });
    }
    apply_edit(text, span.start, span.end, replacement)
}

/// A category-labelled range of a document together with the text it covered
/// when it was created.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DisclosureSpan {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub category: Category,
    pub text: String,
}

impl DisclosureSpan {
    /// Builds a span over `doc`, snapshotting the covered text.
    pub fn new(doc: &Document, start: usize, end: usize, category: Category) -> Result<Self, SpanError> {
        Self::from_text(&doc.id, &doc.text, start, end, category)
    }

    pub fn from_text(
        doc_id: &str,
        text: &str,
        start: usize,
        end: usize,
        category: Category,
    ) -> Result<Self, SpanError> {
        let len = char_len(text);
        if start >= end || end > len {
            return Err(SpanError::OutOfBounds { start, end, len });
        }
        let snapshot = char_slice(text, start, end).expect("checked");
        Ok(Self {
            doc_id: doc_id.to_string(),
            start,
            end,
            category,
            text: snapshot.to_string(),
        })
    }

    pub fn range(&self) -> SpanRange {
        SpanRange::new_unchecked(self.start, self.end)
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Checks the span invariants against its source document.
    pub fn validate_against(&self, doc: &Document) -> Result<(), SpanError> {
        if self.doc_id != doc.id {
            return Err(SpanError::WrongDocument {
                span_doc: self.doc_id.clone(),
                doc: doc.id.clone(),
            });
        }
        let len = char_len(&doc.text);
        if self.start >= self.end || self.end > len {
            return Err(SpanError::OutOfBounds {
                start: self.start,
                end: self.end,
                len,
            });
        }
        let found = char_slice(&doc.text, self.start, self.end).expect("checked");
        if found != self.text {
            return Err(SpanError::SnapshotMismatch {
                start: self.start,
                end: self.end,
                expected: self.text.clone(),
                found: found.to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    #[default]
    Gold,
    Predicted,
}

/// All spans one annotator (or one model) produced for one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub doc_id: String,
    pub annotator_id: String,
    pub spans: Vec<DisclosureSpan>,
    pub layer: Layer,
}

impl AnnotationSet {
    pub fn new(doc_id: impl Into<String>, annotator_id: impl Into<String>, layer: Layer) -> Self {
        Self {
            doc_id: doc_id.into(),
            annotator_id: annotator_id.into(),
            spans: Vec::new(),
            layer,
        }
    }

    /// Resolves overlaps with the detection merge rule and sorts by start.
    pub fn normalize(&mut self) {
        self.spans = crate::detect::merge_spans(std::mem::take(&mut self.spans));
    }

    pub fn is_normalized(&self) -> bool {
        self.spans
            .windows(2)
            .all(|w| w[0].end <= w[1].start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(s: usize, e: usize) -> SpanRange {
        SpanRange::new(s, e).unwrap()
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(overlap_len(r(0, 4), r(0, 4)), 4);
        assert_eq!(overlap_len(r(0, 4), r(4, 8)), 0);
        assert_eq!(overlap_len(r(5, 10), r(7, 20)), 3);
    }

    #[test]
    fn containment_examples() {
        assert!(contains_relation(r(0, 10), r(2, 5)));
        assert!(contains_relation(r(0, 5), r(0, 5)));
        assert!(!contains_relation(r(0, 6), r(3, 9)));
    }

    #[test]
    fn edit_examples() {
        let (out, end) = apply_edit("Im 16F I think", 0, 6, "I'm a teenage girl").unwrap();
        assert_eq!(out, "I'm a teenage girl I think");
        assert_eq!(end, 18);
        assert_eq!(apply_edit("abcdef", 2, 4, "").unwrap(), ("abef".to_string(), 2));
        assert!(matches!(
            apply_edit("abc", 1, 4, "x"),
            Err(SpanError::OutOfBounds { .. })
        ));
        assert!(apply_edit("abc", 2, 2, "x").is_err());
    }

    #[test]
    fn stale_span_edit_is_rejected() {
        let span = DisclosureSpan::from_text("d", "my gf and I", 0, 5, Category::WifeGF).unwrap();
        assert!(apply_span_edit("my gf and I", &span, "my partner").is_ok());
        assert!(matches!(
            apply_span_edit("my bf and I", &span, "my partner"),
            Err(SpanError::SnapshotMismatch { .. })
        ));
    }

    #[test]
    fn span_snapshot_uses_code_points() {
        let doc = Document::body("d1", "t1", "Ich wohne in Köln, ja");
        let span = DisclosureSpan::new(&doc, 0, 17, Category::Location).unwrap();
        assert_eq!(span.text, "Ich wohne in Köln");
        span.validate_against(&doc).unwrap();
        let json = serde_json::to_string(&span).unwrap();
        let back: DisclosureSpan = serde_json::from_str(&json).unwrap();
        back.validate_against(&doc).unwrap();
    }

    fn range() -> impl Strategy<Value = SpanRange> {
        (0usize..40, 1usize..20).prop_map(|(s, l)| r(s, s + l))
    }

    proptest! {
        #[test]
        fn overlap_symmetric_and_bounded(a in range(), b in range()) {
            let o = overlap_len(a, b);
            prop_assert_eq!(o, overlap_len(b, a));
            prop_assert!(o <= a.len().min(b.len()));
            if contains_relation(a, b) {
                prop_assert_eq!(o, a.len().min(b.len()));
            }
        }

        #[test]
        fn edit_preserves_outside(text in "[a-zé🙂 ]{1,30}", s in 0usize..30, l in 1usize..10, rep in "[A-Z]{0,6}") {
            let n = char_len(&text);
            prop_assume!(s < n);
            let e = (s + l).min(n);
            let (out, new_end) = apply_edit(&text, s, e, &rep).unwrap();
            let before: Vec<char> = text.chars().collect();
            let after: Vec<char> = out.chars().collect();
            prop_assert_eq!(&before[..s], &after[..s]);
            prop_assert_eq!(&before[e..], &after[new_end..]);
            let same = apply_edit(&text, s, e, char_slice(&text, s, e).unwrap()).unwrap();
            prop_assert_eq!(same.0, text);
        }
    }
}
