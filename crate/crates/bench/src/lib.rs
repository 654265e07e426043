//! Seeded synthetic inputs for the criterion benches.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use disclose_core::text::tokenize;
use disclose_core::{AnnotationSet, Category, DisclosureSpan, Document, Layer};

const WORDS: [&str; 16] = [
    "I", "my", "wife", "and", "live", "in", "Denver", "work", "as", "a", "nurse", "turned", "32", "last", "month", ".",
];

/// `n` documents of about `tokens` words, with gold spans and noisy predictions.
pub fn span_corpus(n: usize, tokens: usize, seed: u64) -> (Vec<Document>, Vec<AnnotationSet>, Vec<AnnotationSet>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n);
    let mut gold = Vec::with_capacity(n);
    let mut pred = Vec::with_capacity(n);
    for d in 0..n {
        let text: Vec<&str> = (0..tokens).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
        let doc = Document::body(format!("d{d}"), format!("d{d}"), text.join(" "));
        let toks = tokenize(&doc.text);
        let mut g = AnnotationSet::new(doc.id.clone(), "gold", Layer::Gold);
        let mut p = AnnotationSet::new(doc.id.clone(), "pred", Layer::Predicted);
        let mut i = 0;
        while i + 1 < toks.len() {
            let len = rng.random_range(1..=6).min(toks.len() - i);
            let cat = Category::ALL[rng.random_range(0..Category::ALL.len())];
            if rng.random_bool(0.2) {
                g.spans.push(DisclosureSpan::new(&doc, toks[i].start, toks[i + len - 1].end, cat).unwrap());
                let a = i.saturating_sub(rng.random_range(0..=1));
                let b = (i + len - 1 + rng.random_range(0..=1)).min(toks.len() - 1);
                if rng.random_bool(0.8) {
                    p.spans.push(DisclosureSpan::new(&doc, toks[a].start, toks[b].end, cat).unwrap());
                }
            }
            i += len + 1;
        }
        docs.push(doc);
        gold.push(g);
        pred.push(p);
    }
    (docs, gold, pred)
}

/// `k` short candidate strings.
pub fn candidates(k: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| {
            let n = rng.random_range(2..=8);
            (0..n).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_valid_and_seeded() {
        let (docs, gold, pred) = span_corpus(20, 40, 7);
        for ((d, g), p) in docs.iter().zip(&gold).zip(&pred) {
            for s in g.spans.iter().chain(&p.spans) {
                s.validate_against(d).unwrap();
            }
        }
        assert_eq!(span_corpus(20, 40, 7).1, gold);
        assert_eq!(candidates(3, 1), candidates(3, 1));
    }
}
