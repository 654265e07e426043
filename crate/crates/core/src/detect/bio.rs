//! BIO label codec between token sequences and category spans.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::detect::segment::Chunk;
use crate::span::{DisclosureSpan, SpanRange};
use crate::taxonomy::Category;
use crate::text::{char_slice, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BioLabel {
    O,
    B(Category),
    I(Category),
}

impl BioLabel {
    pub fn category(self) -> Option<Category> {
        match self {
            BioLabel::O => None,
            BioLabel::B(c) | BioLabel::I(c) => Some(c),
        }
    }
}

impl fmt::Display for BioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioLabel::O => f.write_str("O"),
            BioLabel::B(c) => write!(f, "B-{c}"),
            BioLabel::I(c) => write!(f, "I-{c}"),
        }
    }
}

impl FromStr for BioLabel {
    type Err = BioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(BioLabel::O);
        }
        let bad = || BioError::BadLabel(s.to_string());
        let (prefix, cat) = s.split_once('-').ok_or_else(bad)?;
        let cat: Category = cat.parse().map_err(|_| bad())?;
        match prefix {
            "B" => Ok(BioLabel::B(cat)),
            "I" => Ok(BioLabel::I(cat)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for BioLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BioLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BioError {
    #[error("spans overlap: [{}, {}) and [{}, {})", .0.start, .0.end, .1.start, .1.end)]
    OverlappingSpans(SpanRange, SpanRange),
    #[error("{labels} labels for {tokens} tokens")]
    LengthMismatch { labels: usize, tokens: usize },
    #[error("malformed BIO label `{0}`")]
    BadLabel(String),
}

/// A range with its category, independent of any document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledRange {
    pub range: SpanRange,
    pub category: Category,
}

impl From<&DisclosureSpan> for LabeledRange {
    fn from(s: &DisclosureSpan) -> Self {
        LabeledRange {
            range: s.range(),
            category: s.category,
        }
    }
}

/// Labels tokens from spans: the first token intersecting a span gets `B-c`, later
/// intersecting tokens get `I-c`, everything else `O`. A token already claimed by an
/// earlier span keeps its label.
pub fn encode_bio(tokens: &[Token], spans: &[LabeledRange]) -> Result<Vec<BioLabel>, BioError> {
    let mut sorted: Vec<LabeledRange> = spans.to_vec();
    sorted.sort_by_key(|s| (s.range.start, s.range.end));
    for w in sorted.windows(2) {
        if w[0].range.end > w[1].range.start {
            return Err(BioError::OverlappingSpans(w[0].range, w[1].range));
        }
    }

    let mut labels = vec![BioLabel::O; tokens.len()];
    let mut t = 0;
    for span in &sorted {
        while t < tokens.len() && tokens[t].end <= span.range.start {
            t += 1;
        }
        let mut first = true;
        let mut k = t;
        while k < tokens.len() && tokens[k].start < span.range.end {
            if labels[k] == BioLabel::O && tokens[k].end > tokens[k].start {
                labels[k] = if first {
                    BioLabel::B(span.category)
                } else {
                    BioLabel::I(span.category)
                };
                first = false;
            }
            k += 1;
        }
    }
    Ok(labels)
}

/// Decodes labels into token-snapped ranges. Maximal `B-c (I-c)*` runs become one
/// range; an `I-c` that does not continue a run of the same category opens a new one.
pub fn decode_bio_ranges(labels: &[BioLabel], tokens: &[Token]) -> Result<Vec<LabeledRange>, BioError> {
    if labels.len() != tokens.len() {
        return Err(BioError::LengthMismatch {
            labels: labels.len(),
            tokens: tokens.len(),
        });
    }
    let mut out = Vec::new();
    let mut open: Option<(Category, usize, usize)> = None;
    for (label, tok) in labels.iter().zip(tokens) {
        match *label {
            BioLabel::O => {
                if let Some((c, s, e)) = open.take() {
                    out.push(LabeledRange { range: SpanRange::new_unchecked(s, e), category: c });
                }
            }
            BioLabel::B(c) => {
                if let Some((pc, s, e)) = open.take() {
                    out.push(LabeledRange { range: SpanRange::new_unchecked(s, e), category: pc });
                }
                open = Some((c, tok.start, tok.end));
            }
            BioLabel::I(c) => match open {
                Some((pc, s, _)) if pc == c => open = Some((c, s, tok.end)),
                _ => {
                    if let Some((pc, s, e)) = open.take() {
                        out.push(LabeledRange { range: SpanRange::new_unchecked(s, e), category: pc });
                    }
                    open = Some((c, tok.start, tok.end));
                }
            },
        }
    }
    if let Some((c, s, e)) = open {
        out.push(LabeledRange { range: SpanRange::new_unchecked(s, e), category: c });
    }
    out.retain(|r| !r.range.is_empty());
    Ok(out)
}

/// Decodes a tagged chunk into document-level spans. Token offsets are relative
/// to the chunk; the chunk's `start_offset` is added.
pub fn decode_bio(labels: &[BioLabel], tokens: &[Token], chunk: &Chunk) -> Result<Vec<DisclosureSpan>, BioError> {
    Ok(decode_bio_ranges(labels, tokens)?
        .into_iter()
        .map(|r| DisclosureSpan {
            doc_id: chunk.doc_id.clone(),
            start: chunk.start_offset + r.range.start,
            end: chunk.start_offset + r.range.end,
            category: r.category,
            text: char_slice(&chunk.text, r.range.start, r.range.end)
                .unwrap_or_default()
                .to_string(),
        })
        .collect())
}
