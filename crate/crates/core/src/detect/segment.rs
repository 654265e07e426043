//! Splitting documents into the chunks a tagger sees.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::document::Document;
use crate::span::SpanRange;
use crate::text::{char_len, char_slice, whitespace_words};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SegmentStrategy {
    Whole,
    Words256,
    Words128,
    Words64,
    #[default]
    Sentence,
}

impl SegmentStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentStrategy::Whole => "whole",
            SegmentStrategy::Words256 => "words256",
            SegmentStrategy::Words128 => "words128",
            SegmentStrategy::Words64 => "words64",
            SegmentStrategy::Sentence => "sentence",
        }
    }

    fn words_per_chunk(self) -> Option<usize> {
        match self {
            SegmentStrategy::Words256 => Some(256),
            SegmentStrategy::Words128 => Some(128),
            SegmentStrategy::Words64 => Some(64),
            _ => None,
        }
    }
}

impl fmt::Display for SegmentStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SegmentStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "whole" => Ok(SegmentStrategy::Whole),
            "words256" => Ok(SegmentStrategy::Words256),
            "words128" => Ok(SegmentStrategy::Words128),
            "words64" => Ok(SegmentStrategy::Words64),
            "sentence" => Ok(SegmentStrategy::Sentence),
            other => Err(format!("unknown segmentation strategy `{other}`")),
        }
    }
}

/// A contiguous piece of a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub index: usize,
    /// Code-point offset of the chunk's first character in the document.
    pub start_offset: usize,
    pub text: String,
    pub strategy: SegmentStrategy,
}

impl Chunk {
    pub fn id(&self) -> String {
        format!("{}#{}", self.doc_id, self.index)
    }

    pub fn range(&self) -> SpanRange {
        SpanRange::new_unchecked(self.start_offset, self.start_offset + char_len(&self.text))
    }
}

/// Splits text into sentences, returned as trimmed, non-empty code-point ranges in order.
pub trait SentenceSplitter: Send + Sync {
    fn split(&self, text: &str) -> Vec<SpanRange>;
}

/// Punctuation-based splitter: a sentence ends at a run of `.`, `!`, `?` or `…`
/// (plus trailing quotes/brackets) that is followed by whitespace, and at blank
/// or single line breaks. Common abbreviations do not end a sentence.
#[derive(Debug, Clone, Default)]
pub struct RuleSentenceSplitter;

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "approx", "no",
];

impl RuleSentenceSplitter {
    fn is_abbreviation(chars: &[char], dot_idx: usize) -> bool {
        let mut s = dot_idx;
        while s > 0 && (chars[s - 1].is_alphabetic() || chars[s - 1] == '.') {
            s -= 1;
        }
        let word: String = chars[s..dot_idx].iter().collect::<String>().to_lowercase();
        ABBREVIATIONS.contains(&word.as_str())
    }
}

impl SentenceSplitter for RuleSentenceSplitter {
    fn split(&self, text: &str) -> Vec<SpanRange> {
        let chars: Vec<char> = text.chars().collect();
        let n = chars.len();
        let mut bounds = Vec::new();
        let mut seg_start = 0;
        let mut i = 0;
        while i < n {
            let c = chars[i];
            if c == '\n' {
                bounds.push((seg_start, i));
                seg_start = i + 1;
                i += 1;
                continue;
            }
            if matches!(c, '.' | '!' | '?' | '…') {
                let mut j = i;
                while j < n && matches!(chars[j], '.' | '!' | '?' | '…') {
                    j += 1;
                }
                while j < n && matches!(chars[j], '"' | '\'' | ')' | ']' | '”' | '’') {
                    j += 1;
                }
                let at_break = j == n || chars[j].is_whitespace();
                let abbrev = c == '.' && j == i + 1 && Self::is_abbreviation(&chars, i);
                if at_break && !abbrev {
                    bounds.push((seg_start, j));
                    seg_start = j;
                }
                i = j;
                continue;
            }
            i += 1;
        }
        bounds.push((seg_start, n));

        bounds
            .into_iter()
            .filter_map(|(s, e)| {
                let mut s = s;
                let mut e = e;
                while s < e && chars[s].is_whitespace() {
                    s += 1;
                }
                while e > s && chars[e - 1].is_whitespace() {
                    e -= 1;
                }
                SpanRange::new(s, e)
            })
            .collect()
    }
}

/// Segments `doc` into ordered, non-overlapping chunks.
///
/// `Whole` yields the entire text as one chunk. The other strategies drop
/// whitespace between chunks, so every non-whitespace character lands in
/// exactly one chunk.
pub fn segment(doc: &Document, strategy: SegmentStrategy, splitter: &dyn SentenceSplitter) -> Vec<Chunk> {
    let ranges: Vec<SpanRange> = match strategy {
        SegmentStrategy::Whole => SpanRange::new(0, char_len(&doc.text)).into_iter().collect(),
        SegmentStrategy::Sentence => splitter.split(&doc.text),
        words => {
            let per = words.words_per_chunk().expect("word strategy");
            whitespace_words(&doc.text)
                .chunks(per)
                .map(|group| SpanRange::new_unchecked(group[0].start, group[group.len() - 1].end))
                .collect()
        }
    };
    ranges
        .into_iter()
        .enumerate()
        .map(|(index, r)| Chunk {
            doc_id: doc.id.clone(),
            index,
            start_offset: r.start,
            text: char_slice(&doc.text, r.start, r.end)
                .expect("segment ranges lie within the document")
                .to_string(),
            strategy,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(text: &str) -> Document {
        Document::body("d", "t", text)
    }

    #[test]
    fn words128_on_300_words() {
        let text = (0..300).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let chunks = segment(&doc(&text), SegmentStrategy::Words128, &RuleSentenceSplitter);
        let counts: Vec<usize> = chunks.iter().map(|c| c.text.split_whitespace().count()).collect();
        assert_eq!(counts, vec![128, 128, 44]);
    }

    #[test]
    fn two_sentences() {
        let chunks = segment(&doc("A. B."), SegmentStrategy::Sentence, &RuleSentenceSplitter);
        let texts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, vec!["A.", "B."]);
        assert_eq!(chunks[1].start_offset, 3);
    }

    #[test]
    fn whole_is_identity() {
        let text = "  Some text. More text  ";
        let chunks = segment(&doc(text), SegmentStrategy::Whole, &RuleSentenceSplitter);
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].range(), SpanRange::new(0, char_len(text)).unwrap());
        assert_eq!(chunks[0].text, text);
    }

    #[test]
    fn abbreviations_and_decimals_do_not_split() {
        let ranges = RuleSentenceSplitter.split("I saw Dr. Smith at 3.5 pm. Then I left!");
        assert_eq!(ranges.len(), 2);
    }

    #[test]
    fn newlines_split() {
        assert_eq!(RuleSentenceSplitter.split("hello there\nsecond line").len(), 2);
    }

    fn non_ws(s: &str) -> Vec<char> {
        let mut v: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        v.sort_unstable();
        v
    }

    proptest! {
        #[test]
        fn chunks_tile_non_whitespace(text in "[a-z .!?\n]{1,200}", which in 0usize..5) {
            let strategy = [
                SegmentStrategy::Whole,
                SegmentStrategy::Words256,
                SegmentStrategy::Words128,
                SegmentStrategy::Words64,
                SegmentStrategy::Sentence,
            ][which];
            let d = doc(&text);
            let chunks = segment(&d, strategy, &RuleSentenceSplitter);
            let mut prev_end = 0;
            let mut all = String::new();
            for c in &chunks {
                prop_assert!(c.start_offset >= prev_end);
                prop_assert_eq!(char_slice(&text, c.range().start, c.range().end).unwrap(), c.text.as_str());
                prev_end = c.range().end;
                all.push_str(&c.text);
            }
            prop_assert_eq!(non_ws(&all), non_ws(&text));
        }
    }
}
