use std::fmt;

use thiserror::Error;

use crate::span::{AnnotationSet, DisclosureSpan, Layer, SpanError};
use crate::taxonomy::Category;
use crate::text::{char_len, char_slice};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BratErrorKind {
    Malformed(String),
    Discontinuous,
    UnknownCategory(String),
    OutOfRange { start: usize, end: usize, len: usize },
    SurfaceMismatch { expected: String, found: String },
}

impl fmt::Display for BratErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BratErrorKind::Malformed(why) => write!(f, "malformed annotation: {why}"),
            BratErrorKind::Discontinuous => f.write_str("discontinuous spans are not supported"),
            BratErrorKind::UnknownCategory(c) => write!(f, "unknown category `{c}`"),
            BratErrorKind::OutOfRange { start, end, len } => {
                write!(f, "offsets {start}..{end} outside text of length {len}")
            }
            BratErrorKind::SurfaceMismatch { expected, found } => {
                write!(f, "surface text {found:?} does not match document text {expected:?}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct BratError {
    pub line: usize,
    pub kind: BratErrorKind,
}

/// BRAT surface strings are single-line.
fn surface(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

/// Parses text-bound (`T`) annotations of a `.ann` file. Other annotation kinds
/// and comments are ignored.
pub fn parse_brat(
    ann_text: &str,
    doc_text: &str,
    doc_id: &str,
    annotator_id: &str,
    layer: Layer,
) -> Result<AnnotationSet, BratError> {
    let mut set = AnnotationSet::new(doc_id, annotator_id, layer);
    let len = char_len(doc_text);
    for (i, raw) in ann_text.lines().enumerate() {
        let line = i + 1;
        let err = |kind| BratError { line, kind };
        if !raw.starts_with('T') {
            continue;
        }
        let mut fields = raw.splitn(3, '\t');
        let (_id, middle, text) = match (fields.next(), fields.next(), fields.next()) {
            (Some(id), Some(m), Some(t)) => (id, m, t),
            _ => return Err(err(BratErrorKind::Malformed("expected three tab-separated fields".into()))),
        };
        if middle.contains(';') {
            return Err(err(BratErrorKind::Discontinuous));
        }
        let parts: Vec<&str> = middle.split(' ').collect();
        let [label, start, end] = parts[..] else {
            return Err(err(BratErrorKind::Malformed(format!("expected `<Category> <start> <end>`, got {middle:?}"))));
        };
        let category: Category = label
            .parse()
            .map_err(|_| err(BratErrorKind::UnknownCategory(label.to_string())))?;
        let parse_off = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(BratErrorKind::Malformed(format!("bad offset {s:?}"))))
        };
        let (start, end) = (parse_off(start)?, parse_off(end)?);
        let Some(found) = char_slice(doc_text, start, end).filter(|_| start < end) else {
            return Err(err(BratErrorKind::OutOfRange { start, end, len }));
        };
        if surface(found) != surface(text) {
            return Err(err(BratErrorKind::SurfaceMismatch {
                expected: found.to_string(),
                found: text.to_string(),
            }));
        }
        let span = DisclosureSpan::from_text(doc_id, doc_text, start, end, category).map_err(|e| match e {
            SpanError::OutOfBounds { start, end, len } => err(BratErrorKind::OutOfRange { start, end, len }),
            other => err(BratErrorKind::Malformed(other.to_string())),
        })?;
        set.spans.push(span);
    }
    Ok(set)
}

/// Writes spans as `T<k>` lines in set order.
pub fn serialize_brat(set: &AnnotationSet) -> String {
    let mut out = String::new();
    for (i, s) in set.spans.iter().enumerate() {
        out.push_str(&format!(
            "T{}\t{} {} {}\t{}\n",
            i + 1,
            s.category.as_str(),
            s.start,
            s.end,
            surface(&s.text)
        ));
    }
    out
}
