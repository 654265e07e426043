use std::collections::BTreeMap;

use crate::eval::{EvalError, Prf};
use crate::span::DisclosureSpan;
use crate::taxonomy::Category;
use crate::text::{tokenize, Token};

/// One category (or none) per token of a document.
pub type TokenLabels = Vec<Option<Category>>;

/// Labels each token with the category of the first span (by start) it intersects.
pub fn token_labels(tokens: &[Token], spans: &[DisclosureSpan]) -> TokenLabels {
    let mut sorted: Vec<&DisclosureSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    tokens
        .iter()
        .map(|t| {
            sorted
                .iter()
                .find(|s| s.start < t.end && t.start < s.end)
                .map(|s| s.category)
        })
        .collect()
}

/// Token labels for `text` under the default tokenizer.
pub fn document_token_labels(text: &str, spans: &[DisclosureSpan]) -> TokenLabels {
    token_labels(&tokenize(text), spans)
}

/// Per-class token-level scores. Documents are aligned by position and must have
/// identical token counts on both sides. Unlabelled tokens are not a class.
pub fn token_prf(pred: &[TokenLabels], gold: &[TokenLabels]) -> Result<BTreeMap<Category, Prf>, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::TokenizationMismatch(format!(
            "{} predicted documents vs {} gold documents",
            pred.len(),
            gold.len()
        )));
    }
    // (tp, predicted, gold) per class
    let mut counts: BTreeMap<Category, (usize, usize, usize)> = BTreeMap::new();
    for (doc, (p, g)) in pred.iter().zip(gold).enumerate() {
        if p.len() != g.len() {
            return Err(EvalError::TokenizationMismatch(format!(
                "document {doc}: {} predicted tokens vs {} gold tokens",
                p.len(),
                g.len()
            )));
        }
        for (pl, gl) in p.iter().zip(g) {
            if let Some(c) = pl {
                let e = counts.entry(*c).or_default();
                e.1 += 1;
                if pl == gl {
                    e.0 += 1;
                }
            }
            if let Some(c) = gl {
                counts.entry(*c).or_default().2 += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|(c, (tp, np, ng))| (c, Prf::from_counts(tp, tp, np, ng)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Category::*;

    fn labels(spec: &[Option<Category>]) -> TokenLabels {
        spec.to_vec()
    }

    #[test]
    fn identical_sequences() {
        let g = vec![labels(&[None, Some(Age), Some(Age), None, Some(Pet)])];
        for prf in token_prf(&g, &g).unwrap().values() {
            assert_eq!(prf.f1, 1.0);
        }
    }

    #[test]
    fn shifted_span_halves_recall() {
        // gold covers tokens 0..4, prediction is shifted by two tokens to 2..6
        let gold = vec![labels(&[Some(Health), Some(Health), Some(Health), Some(Health), None, None])];
        let pred = vec![labels(&[None, None, Some(Health), Some(Health), Some(Health), Some(Health)])];
        let prf = token_prf(&pred, &gold).unwrap()[&Health];
        assert_eq!(prf.recall, 0.5);
        assert_eq!(prf.precision, 0.5);
    }

    #[test]
    fn all_outside_predictions() {
        let gold = vec![labels(&[Some(Age), None])];
        let pred = vec![labels(&[None, None])];
        assert_eq!(token_prf(&pred, &gold).unwrap()[&Age].f1, 0.0);
    }

    #[test]
    fn mismatch_is_error() {
        let gold = vec![labels(&[Some(Age), None])];
        let pred = vec![labels(&[None])];
        assert!(matches!(token_prf(&pred, &gold), Err(EvalError::TokenizationMismatch(_))));
    }

    #[test]
    fn labels_from_spans() {
        let text = "I am 23 and my gf";
        let spans = vec![
            DisclosureSpan::from_text("d", text, 0, 7, Age).unwrap(),
            DisclosureSpan::from_text("d", text, 12, 17, WifeGF).unwrap(),
        ];
        assert_eq!(
            document_token_labels(text, &spans),
            vec![Some(Age), Some(Age), Some(Age), None, Some(WifeGF), Some(WifeGF)]
        );
    }
}
