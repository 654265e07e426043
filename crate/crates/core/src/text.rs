//! Code-point offset helpers and the default word tokenizer.
//!
//! Every offset in this crate counts Unicode scalar values, not bytes.

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::span::SpanRange;

/// Number of code points in `s`.
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Byte offset of the code point at `char_idx`; `char_idx == char_len(s)` maps to `s.len()`.
pub fn byte_offset(s: &str, char_idx: usize) -> Option<usize> {
    if char_idx == 0 {
        return Some(0);
    }
    let mut count = 0;
    for (b, _) in s.char_indices() {
        if count == char_idx {
            return Some(b);
        }
        count += 1;
    }
    (count == char_idx).then_some(s.len())
}

/// `s[start..end)` in code points, or `None` when out of range.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let b0 = byte_offset(s, start)?;
    let b1 = b0 + byte_offset(&s[b0..], end - start)?;
    Some(&s[b0..b1])
}

/// Precomputed byte→char conversion for a single string, used when mapping regex
/// matches (byte offsets) back to code points.
pub struct CharMap {
    // byte offset of each char boundary, plus a trailing s.len()
    boundaries: Vec<usize>,
}

impl CharMap {
    pub fn new(s: &str) -> Self {
        let mut boundaries: Vec<usize> = s.char_indices().map(|(b, _)| b).collect();
        boundaries.push(s.len());
        Self { boundaries }
    }

    /// Char index for a byte offset that lies on a char boundary.
    pub fn to_char(&self, byte: usize) -> usize {
        self.boundaries
            .binary_search(&byte)
            .unwrap_or_else(|insert| insert)
    }

    pub fn to_byte(&self, char_idx: usize) -> usize {
        self.boundaries[char_idx.min(self.boundaries.len() - 1)]
    }

    pub fn len_chars(&self) -> usize {
        self.boundaries.len() - 1
    }
}

/// A token as a half-open code-point range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn range(self) -> SpanRange {
        SpanRange::new_unchecked(self.start, self.end)
    }
}

static WORD_TOKEN: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"[\p{L}\p{N}_]+(?:['\u{2019}][\p{L}\p{N}_]+)*|[^\s\p{L}\p{N}_]").unwrap());

/// Default word tokenizer: letter/digit runs (keeping internal apostrophes, so
/// "I'm" is one token) and single punctuation marks.
pub fn tokenize(text: &str) -> Vec<Token> {
    let map = CharMap::new(text);
    WORD_TOKEN
        .find_iter(text)
        .map(|m| Token {
            start: map.to_char(m.start()),
            end: map.to_char(m.end()),
        })
        .collect()
}

/// Whitespace-delimited words as code-point ranges.
pub fn whitespace_words(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut start = None;
    let mut idx = 0;
    for ch in text.chars() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token { start: s, end: idx });
            }
        } else if start.is_none() {
            start = Some(idx);
        }
        idx += 1;
    }
    if let Some(s) = start {
        out.push(Token { start: s, end: idx });
    }
    out
}
