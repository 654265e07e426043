//! Set-to-set generation metrics: matching BLEU/ROUGE over an optimal one-to-one
//! assignment, plus bigram diversity.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eval::assignment::max_weight_assignment;
use crate::eval::EvalError;
use crate::text::{char_slice, tokenize};

/// BLEU smoothing applied for sentence-level scores; recorded in reports.
pub const BLEU_SMOOTHING: &str = "add-one on n-gram orders 2..4 (numerator and denominator)";
pub const BLEU_MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenMetric {
    Bleu,
    Rouge2,
    #[serde(rename = "rougeL")]
    RougeL,
}

impl GenMetric {
    pub const ALL: [GenMetric; 3] = [GenMetric::Bleu, GenMetric::Rouge2, GenMetric::RougeL];

    /// Pairwise score in `[0, 1]`.
    pub fn score(self, hypothesis: &str, reference: &str) -> f64 {
        match self {
            GenMetric::Bleu => sentence_bleu(hypothesis, reference),
            GenMetric::Rouge2 => rouge_n(hypothesis, reference, 2),
            GenMetric::RougeL => rouge_l(hypothesis, reference),
        }
    }
}

impl fmt::Display for GenMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GenMetric::Bleu => "bleu",
            GenMetric::Rouge2 => "rouge2",
            GenMetric::RougeL => "rougeL",
        })
    }
}

impl FromStr for GenMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bleu" => Ok(GenMetric::Bleu),
            "rouge2" | "rouge-2" => Ok(GenMetric::Rouge2),
            "rougel" | "rouge-l" => Ok(GenMetric::RougeL),
            other => Err(format!("unknown generation metric `{other}`")),
        }
    }
}

fn bleu_tokens(text: &str) -> Vec<&str> {
    tokenize(text)
        .into_iter()
        .map(|t| char_slice(text, t.start, t.end).expect("token in range"))
        .collect()
}

fn ngram_counts<'a, 'b>(tokens: &'b [&'a str], n: usize) -> HashMap<&'b [&'a str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence-level BLEU against one reference, case-sensitive over word and
/// punctuation tokens, with add-one smoothing on orders above one.
pub fn sentence_bleu(hypothesis: &str, reference: &str) -> f64 {
    let hyp = bleu_tokens(hypothesis);
    let refs = bleu_tokens(reference);
    if hyp.is_empty() || refs.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=BLEU_MAX_ORDER {
        let h = ngram_counts(&hyp, n);
        let r = ngram_counts(&refs, n);
        let matched: usize = h.iter().map(|(g, c)| (*c).min(*r.get(g).unwrap_or(&0))).sum();
        let total = hyp.len().saturating_sub(n - 1);
        let (num, den) = if n == 1 {
            (matched as f64, total as f64)
        } else {
            (matched as f64 + 1.0, total as f64 + 1.0)
        };
        if num == 0.0 {
            return 0.0;
        }
        log_sum += (num / den).ln();
    }
    let precision = (log_sum / BLEU_MAX_ORDER as f64).exp();
    let (c, r) = (hyp.len() as f64, refs.len() as f64);
    let brevity = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    brevity * precision
}

/// Lowercased alphanumeric tokens, the ROUGE convention.
fn rouge_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn f_measure(overlap: f64, hyp_total: f64, ref_total: f64) -> f64 {
    if overlap == 0.0 || hyp_total == 0.0 || ref_total == 0.0 {
        return 0.0;
    }
    let p = overlap / hyp_total;
    let r = overlap / ref_total;
    2.0 * p * r / (p + r)
}

/// ROUGE-N F-measure.
pub fn rouge_n(hypothesis: &str, reference: &str, n: usize) -> f64 {
    let h = rouge_tokens(hypothesis);
    let r = rouge_tokens(reference);
    let grams = |t: &[String]| -> HashMap<Vec<String>, usize> {
        let mut m = HashMap::new();
        if t.len() >= n {
            for w in t.windows(n) {
                *m.entry(w.to_vec()).or_insert(0) += 1;
            }
        }
        m
    };
    let hg = grams(&h);
    let rg = grams(&r);
    let overlap: usize = hg.iter().map(|(g, c)| (*c).min(*rg.get(g).unwrap_or(&0))).sum();
    f_measure(
        overlap as f64,
        hg.values().sum::<usize>() as f64,
        rg.values().sum::<usize>() as f64,
    )
}

/// ROUGE-L F-measure (longest common subsequence).
pub fn rouge_l(hypothesis: &str, reference: &str) -> f64 {
    let h = rouge_tokens(hypothesis);
    let r = rouge_tokens(reference);
    let mut dp = vec![vec![0usize; r.len() + 1]; h.len() + 1];
    for i in 1..=h.len() {
        for j in 1..=r.len() {
            dp[i][j] = if h[i - 1] == r[j - 1] {
                dp[i - 1][j - 1] + 1
            } else {
                dp[i - 1][j].max(dp[i][j - 1])
            };
        }
    }
    f_measure(dp[h.len()][r.len()] as f64, h.len() as f64, r.len() as f64)
}

/// Pairwise score matrix `[generation][reference]`.
pub fn score_matrix(generations: &[String], references: &[String], metric: GenMetric) -> Vec<Vec<f64>> {
    generations
        .iter()
        .map(|g| references.iter().map(|r| metric.score(g, r)).collect())
        .collect()
}

/// Mean pairwise score under the best one-to-one pairing of generations with
/// references. With unequal list sizes the mean is over `min(|G|, |R|)` pairs.
pub fn matching_score(generations: &[String], references: &[String], metric: GenMetric) -> Result<f64, EvalError> {
    if generations.is_empty() || references.is_empty() {
        return Err(EvalError::EmptyInput("matching_score needs non-empty generations and references"));
    }
    let w = score_matrix(generations, references, metric);
    let assignment = max_weight_assignment(&w);
    let pairs = generations.len().min(references.len());
    let mut matched: Vec<f64> = assignment
        .iter()
        .enumerate()
        .filter_map(|(g, r)| r.map(|r| w[g][r]))
        .collect();
    // fixed summation order, so reordering the inputs cannot move the last bit
    matched.sort_by(f64::total_cmp);
    Ok(matched.iter().sum::<f64>() / pairs as f64)
}

/// Number of distinct lowercased whitespace-token bigrams across all candidates.
/// Bigrams never span two candidates.
pub fn diversity_bigrams<S: AsRef<str>>(generation_sets: &[Vec<S>]) -> usize {
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    for set in generation_sets {
        for cand in set {
            let toks: Vec<String> = cand.as_ref().split_whitespace().map(str::to_lowercase).collect();
            for w in toks.windows(2) {
                seen.insert((w[0].clone(), w[1].clone()));
            }
        }
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn bleu_identity_and_disjoint() {
        assert!((sentence_bleu("my early thirties", "my early thirties") - 1.0).abs() < 1e-12);
        assert_eq!(sentence_bleu("apple", "orange"), 0.0);
        assert_eq!(sentence_bleu("", "orange"), 0.0);
    }

    #[test]
    fn bleu_hand_computed() {
        // hyp: a b c d (4), ref: a b c e (4)
        // p1 = 3/4; p2 = (2+1)/(3+1); p3 = (1+1)/(2+1); p4 = (0+1)/(1+1); BP = 1
        let expected = ((3.0f64 / 4.0).ln() + (3.0f64 / 4.0).ln() + (2.0f64 / 3.0).ln() + (0.5f64).ln()) / 4.0;
        assert!((sentence_bleu("a b c d", "a b c e") - expected.exp()).abs() < 1e-12);
    }

    #[test]
    fn bleu_brevity_penalty() {
        let short = sentence_bleu("a b", "a b c d");
        // p1 = 1, p2 = 2/2, p3 = 1/1, p4 = 1/1 → precision 1, BP = exp(1 - 4/2)
        assert!((short - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rouge_examples() {
        assert_eq!(rouge_n("the cat sat", "the cat sat", 2), 1.0);
        // bigrams hyp {the cat, cat sat}, ref {the cat, cat ran}: overlap 1 → P = R = 0.5
        assert_eq!(rouge_n("The cat sat", "the cat ran", 2), 0.5);
        // LCS of "a b c d" and "a c d e" is 3 → P = R = 0.75
        assert_eq!(rouge_l("a b c d", "a c d e"), 0.75);
        assert_eq!(rouge_l("", "a"), 0.0);
    }

    #[test]
    fn matching_single_pair_is_plain_metric() {
        for m in GenMetric::ALL {
            let got = matching_score(&s(&["my partner"]), &s(&["my significant other"]), m).unwrap();
            assert_eq!(got, m.score("my partner", "my significant other"));
        }
    }

    #[test]
    fn matching_identical_any_order() {
        let refs = s(&["recently entered my early 30s", "turned into my early thirties", "just started my third decade"]);
        let mut gens = refs.clone();
        gens.rotate_left(1);
        for m in GenMetric::ALL {
            let got = matching_score(&gens, &refs, m).unwrap();
            assert!((got - 1.0).abs() < 1e-12, "{m}: {got}");
        }
    }

    #[test]
    fn matching_empty_is_error() {
        assert!(matching_score(&[], &s(&["a"]), GenMetric::Bleu).is_err());
    }

    #[test]
    fn diversity_examples() {
        assert_eq!(diversity_bigrams(&[vec!["a b c", "a b c", "a b c"]]), 2);
        assert_eq!(diversity_bigrams::<&str>(&[]), 0);
        assert_eq!(diversity_bigrams(&[vec!["A b", "a B"], vec!["b a"]]), 2);
    }

    #[test]
    fn metric_names() {
        for m in GenMetric::ALL {
            assert_eq!(m.to_string().parse::<GenMetric>().unwrap(), m);
        }
    }
}
