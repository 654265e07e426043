use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::span::{apply_edit, SpanError, SpanRange};
use crate::text::{char_len, char_slice};

/// Candidates more than this many times the span's word count are flagged.
pub const LENGTH_FLAG_RATIO: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub fits_context: bool,
    pub non_trivial: bool,
    pub non_empty: bool,
    /// Candidate words over span words.
    pub length_ratio: f64,
    /// Longer than `LENGTH_FLAG_RATIO` times the span. Advisory only.
    pub too_long: bool,
    /// Same as another candidate in its set after case and whitespace folding. Advisory only.
    pub duplicate: bool,
}

impl ValidationReport {
    pub fn accepted(&self) -> bool {
        self.fits_context && self.non_trivial && self.non_empty
    }
}

fn fold(s: &str) -> String {
    s.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// Checks a candidate replacement for `span` (offsets into `sentence`).
pub fn validate_abstraction(sentence: &str, span: SpanRange, candidate: &str) -> Result<ValidationReport, SpanError> {
    let original = char_slice(sentence, span.start, span.end).ok_or(SpanError::OutOfBounds {
        start: span.start,
        end: span.end,
        len: char_len(sentence),
    })?;
    let (edited, new_end) = apply_edit(sentence, span.start, span.end, candidate)?;
    let prefix_kept = char_slice(&edited, 0, span.start) == char_slice(sentence, 0, span.start);
    let suffix_kept = char_slice(&edited, new_end, char_len(&edited)) == char_slice(sentence, span.end, char_len(sentence));
    let fits_context = prefix_kept && suffix_kept && !candidate.contains(['\n', '\r']);

    let span_words = original.split_whitespace().count();
    let cand_words = candidate.split_whitespace().count();
    let length_ratio = if span_words == 0 { 0.0 } else { cand_words as f64 / span_words as f64 };
    Ok(ValidationReport {
        fits_context,
        non_trivial: fold(candidate) != fold(original),
        non_empty: !candidate.trim().is_empty(),
        length_ratio,
        too_long: cand_words as f64 > LENGTH_FLAG_RATIO * span_words as f64,
        duplicate: false,
    })
}

/// Sets `duplicate` on every candidate whose folded form occurs more than once.
pub fn flag_duplicates(candidates: &[String], reports: &mut [ValidationReport]) {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for c in candidates {
        *counts.entry(fold(c)).or_default() += 1;
    }
    for (c, r) in candidates.iter().zip(reports.iter_mut()) {
        r.duplicate = counts[&fold(c)] > 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: usize, e: usize) -> SpanRange {
        SpanRange::new(s, e).unwrap()
    }

    #[test]
    fn teenage_girl_example() {
        let v = validate_abstraction("Im 16F I think...", r(0, 6), "I'm a teenage girl").unwrap();
        assert!(v.accepted());
        assert_eq!(v.length_ratio, 2.0);
        assert!(!v.too_long);
    }

    #[test]
    fn no_op_and_empty_rejected() {
        let v = validate_abstraction("Im 16F I think", r(0, 6), "  im   16f ").unwrap();
        assert!(!v.non_trivial && !v.accepted());
        let v = validate_abstraction("Im 16F I think", r(0, 6), "").unwrap();
        assert!(!v.non_empty && !v.accepted());
    }

    #[test]
    fn newline_does_not_fit() {
        let v = validate_abstraction("my gf and I", r(0, 5), "my\npartner").unwrap();
        assert!(!v.fits_context);
    }

    #[test]
    fn length_flag_is_advisory() {
        let v = validate_abstraction("I am 23", r(5, 7), "in my twenties or so maybe").unwrap();
        assert!(v.too_long && v.accepted());
    }

    #[test]
    fn duplicates_flagged_regardless_of_order() {
        let cands: Vec<String> = ["My partner", "someone", "my  PARTNER"].map(String::from).to_vec();
        let mut reports: Vec<_> = cands
            .iter()
            .map(|c| validate_abstraction("My girlfriend said", r(0, 13), c).unwrap())
            .collect();
        flag_duplicates(&cands, &mut reports);
        assert_eq!(reports.iter().map(|r| r.duplicate).collect::<Vec<_>>(), [true, false, true]);
    }

    #[test]
    fn out_of_range() {
        assert!(validate_abstraction("abc", r(1, 9), "x").is_err());
    }
}
