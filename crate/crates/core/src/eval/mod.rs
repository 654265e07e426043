//! Evaluation: span and token F1, agreement statistics, matching generation
//! metrics, and importance-rating accuracy.

mod agreement;
mod assignment;
mod generation;
mod span_f1;
mod token_f1;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agreement::{krippendorff_alpha_nominal, mean_krippendorff_alpha, two_agree, AlphaSummary};
pub use assignment::{assignment_weight, max_weight_assignment};
pub use generation::{
    diversity_bigrams, matching_score, rouge_l, rouge_n, score_matrix, sentence_bleu, GenMetric, BLEU_MAX_ORDER,
    BLEU_SMOOTHING,
};
pub use span_f1::{group_spans, match_count, partial_match, span_counts, span_prf, MatchCounts, SpanMatchMode};
pub use token_f1::{document_token_labels, token_labels, token_prf, TokenLabels};

use crate::document::Document;
use crate::importance::ImportanceLevel;
use crate::span::{AnnotationSet, DisclosureSpan};
use crate::taxonomy::Category;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("tokenization mismatch: {0}")]
    TokenizationMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no post has at least two annotators")]
    InsufficientAnnotators,
    #[error("agreement is undefined for every post")]
    UndefinedAgreement,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}

/// Precision, recall and F1 in `[0, 1]`; `support` is the number of gold items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

impl Prf {
    /// `tp_p / predicted` and `tp_r / gold`; an empty denominator scores 0.
    pub fn from_counts(tp_precision: usize, tp_recall: usize, predicted: usize, gold: usize) -> Self {
        let precision = if predicted == 0 { 0.0 } else { tp_precision as f64 / predicted as f64 };
        let recall = if gold == 0 { 0.0 } else { tp_recall as f64 / gold as f64 };
        Self {
            precision,
            recall,
            f1: f1(precision, recall),
            support: gold,
        }
    }

    /// Unweighted mean of precision, recall and F1; supports are summed.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Prf>) -> Option<Prf> {
        let items: Vec<&Prf> = items.into_iter().collect();
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        Some(Prf {
            precision: items.iter().map(|p| p.precision).sum::<f64>() / n,
            recall: items.iter().map(|p| p.recall).sum::<f64>() / n,
            f1: items.iter().map(|p| p.f1).sum::<f64>() / n,
            support: items.iter().map(|p| p.support).sum(),
        })
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub exact: Prf,
    pub partial: Prf,
    pub token: Option<Prf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub exact: Option<Prf>,
    pub partial: Option<Prf>,
    pub token: Option<Prf>,
}

/// Per-class exact/partial/token scores and their unweighted averages over the
/// classes that occur in the gold data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: BTreeMap<Category, ClassScores>,
    pub averaged_over: Vec<Category>,
    pub averages: Averages,
    pub metadata: BTreeMap<String, String>,
}

fn spans_by_doc(sets: &[AnnotationSet]) -> HashMap<&str, Vec<DisclosureSpan>> {
    let mut m: HashMap<&str, Vec<DisclosureSpan>> = HashMap::new();
    for s in sets {
        m.entry(s.doc_id.as_str()).or_default().extend(s.spans.iter().cloned());
    }
    m
}

/// Scores predictions against gold. Token-level scores need the document texts
/// and are omitted when `docs` is `None`.
pub fn evaluate(pred: &[AnnotationSet], gold: &[AnnotationSet], docs: Option<&[Document]>) -> Result<EvalReport, EvalError> {
    let exact = span_prf(pred, gold, SpanMatchMode::Exact);
    let partial = span_prf(pred, gold, SpanMatchMode::Partial);

    let token = match docs {
        Some(docs) => {
            let ps = spans_by_doc(pred);
            let gs = spans_by_doc(gold);
            let none = Vec::new();
            let pl: Vec<TokenLabels> = docs
                .iter()
                .map(|d| document_token_labels(&d.text, ps.get(d.id.as_str()).unwrap_or(&none)))
                .collect();
            let gl: Vec<TokenLabels> = docs
                .iter()
                .map(|d| document_token_labels(&d.text, gs.get(d.id.as_str()).unwrap_or(&none)))
                .collect();
            Some(token_prf(&pl, &gl)?)
        }
        None => None,
    };

    let zero = Prf::from_counts(0, 0, 0, 0);
    let mut per_class = BTreeMap::new();
    for cat in exact.keys().chain(partial.keys()) {
        per_class.entry(*cat).or_insert_with(|| ClassScores {
            exact: exact.get(cat).copied().unwrap_or(zero),
            partial: partial.get(cat).copied().unwrap_or(zero),
            token: token.as_ref().map(|t| t.get(cat).copied().unwrap_or(zero)),
        });
    }

    let averaged_over: Vec<Category> = per_class
        .iter()
        .filter(|(_, s)| s.partial.support > 0)
        .map(|(c, _)| *c)
        .collect();
    let pick = |f: &dyn Fn(&ClassScores) -> Option<Prf>| -> Vec<Prf> {
        averaged_over.iter().filter_map(|c| f(&per_class[c])).collect()
    };
    let averages = Averages {
        exact: Prf::mean(&pick(&|s| Some(s.exact))),
        partial: Prf::mean(&pick(&|s| Some(s.partial))),
        token: token.as_ref().and_then(|_| Prf::mean(&pick(&|s| s.token))),
    };

    let metadata = BTreeMap::from([
        ("matching".to_string(), "maximum one-to-one per document and class".to_string()),
        (
            "partial_rule".to_string(),
            "containment and overlap > 50% of the longer span".to_string(),
        ),
        (
            "average".to_string(),
            "unweighted mean over classes present in gold; unlabelled tokens excluded".to_string(),
        ),
        ("offsets".to_string(), "unicode code points, half-open".to_string()),
    ]);

    Ok(EvalReport {
        per_class,
        averaged_over,
        averages,
        metadata,
    })
}

impl EvalReport {
    /// Plain-text table: one row per class with its gold span count, F1 ×100 per mode.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let fmt = |p: Option<Prf>| p.map_or_else(|| "-".to_string(), |p| format!("{:.2}", p.f1 * 100.0));
        let _ = writeln!(out, "{:<28} {:>9} {:>11} {:>9}", "Class (#spans)", "Exact F1", "Partial F1", "Token F1");
        let _ = writeln!(out, "{}", "-".repeat(60));
        for (cat, s) in &self.per_class {
            let label = format!("{} ({})", cat.display_name(), s.partial.support);
            let _ = writeln!(
                out,
                "{:<28} {:>9} {:>11} {:>9}",
                label,
                fmt(Some(s.exact)),
                fmt(Some(s.partial)),
                fmt(s.token)
            );
        }
        let _ = writeln!(out, "{}", "-".repeat(60));
        let _ = writeln!(
            out,
            "{:<28} {:>9} {:>11} {:>9}",
            "Average",
            fmt(self.averages.exact),
            fmt(self.averages.partial),
            fmt(self.averages.token)
        );
        out
    }
}

/// Set-level generation scores for a batch of abstraction sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub bleu: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
    pub diversity: usize,
    pub sets: usize,
    pub metadata: BTreeMap<String, String>,
}

/// Averages matching BLEU/ROUGE over `(generations, references)` pairs and counts
/// bigram diversity over the generations.
pub fn evaluate_generations(pairs: &[(Vec<String>, Vec<String>)]) -> Result<GenerationReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput("no generation sets"));
    }
    let mut sums = [0.0; 3];
    for (gens, refs) in pairs {
        for (i, m) in GenMetric::ALL.iter().enumerate() {
            sums[i] += matching_score(gens, refs, *m)?;
        }
    }
    let n = pairs.len() as f64;
    let gens: Vec<Vec<String>> = pairs.iter().map(|(g, _)| g.clone()).collect();
    Ok(GenerationReport {
        bleu: sums[0] / n,
        rouge2: sums[1] / n,
        rouge_l: sums[2] / n,
        diversity: diversity_bigrams(&gens),
        sets: pairs.len(),
        metadata: BTreeMap::from([
            ("bleu_smoothing".to_string(), BLEU_SMOOTHING.to_string()),
            ("bleu_max_order".to_string(), BLEU_MAX_ORDER.to_string()),
            ("matching".to_string(), "Hungarian maximum-weight assignment".to_string()),
        ]),
    })
}

/// Fraction of predictions that equal at least one of the three gold annotations.
pub fn importance_accuracy(preds: &[ImportanceLevel], gold: &[[ImportanceLevel; 3]]) -> Result<f64, EvalError> {
    if preds.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            left: preds.len(),
            right: gold.len(),
        });
    }
    if preds.is_empty() {
        return Err(EvalError::EmptyInput("no importance predictions"));
    }
    let correct = preds.iter().zip(gold).filter(|(p, g)| g.contains(p)).count();
    Ok(correct as f64 / preds.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::Layer;
    use ImportanceLevel::*;

    #[test]
    fn f1_definition() {
        let p = Prf::from_counts(1, 1, 2, 4);
        assert_eq!((p.precision, p.recall), (0.5, 0.25));
        assert!((p.f1 - 2.0 * 0.5 * 0.25 / 0.75).abs() < 1e-12);
        assert_eq!(Prf::from_counts(0, 0, 0, 0).f1, 0.0);
    }

    #[test]
    fn importance_accuracy_rule() {
        assert_eq!(importance_accuracy(&[Low], &[[Low, Moderate, High]]).unwrap(), 1.0);
        assert_eq!(importance_accuracy(&[High], &[[Low, Low, Moderate]]).unwrap(), 0.0);
        assert!(matches!(
            importance_accuracy(&[High, Low], &[[Low, Low, Moderate]]),
            Err(EvalError::LengthMismatch { .. })
        ));
    }

    fn doc_and_sets() -> (Vec<Document>, Vec<AnnotationSet>) {
        let doc = Document::body("d1", "t1", "I live in the UK and my gf is 23");
        let spans = vec![
            DisclosureSpan::new(&doc, 0, 16, Category::Location).unwrap(),
            DisclosureSpan::new(&doc, 21, 26, Category::WifeGF).unwrap(),
        ];
        (vec![doc], group_spans(spans, "gold", Layer::Gold))
    }

    #[test]
    fn identical_report_is_perfect() {
        let (docs, gold) = doc_and_sets();
        let report = evaluate(&gold, &gold, Some(&docs)).unwrap();
        assert_eq!(report.averaged_over, vec![Category::Location, Category::WifeGF]);
        for s in report.per_class.values() {
            assert_eq!((s.exact.f1, s.partial.f1, s.token.unwrap().f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(report.averages.partial.unwrap().f1, 1.0);
        let table = report.to_table();
        assert!(table.contains("Wife/GF (1)"));
        assert!(table.contains("100.00"));
    }

    #[test]
    fn averages_match_listed_classes() {
        let (docs, gold) = doc_and_sets();
        let doc = &docs[0];
        let pred = group_spans(
            vec![
                DisclosureSpan::new(doc, 0, 9, Category::Location).unwrap(),
                DisclosureSpan::new(doc, 27, 32, Category::Age).unwrap(),
            ],
            "model",
            Layer::Predicted,
        );
        let report = evaluate(&pred, &gold, None).unwrap();
        // Age only occurs in predictions, so it is reported but not averaged
        assert!(report.per_class.contains_key(&Category::Age));
        assert!(!report.averaged_over.contains(&Category::Age));
        let mean: f64 = report.averaged_over.iter().map(|c| report.per_class[c].partial.f1).sum::<f64>()
            / report.averaged_over.len() as f64;
        assert!((report.averages.partial.unwrap().f1 - mean).abs() < 1e-12);
        assert!(report.averages.token.is_none());
    }

    #[test]
    fn report_serializes_with_category_keys() {
        let (docs, gold) = doc_and_sets();
        let v = serde_json::to_value(evaluate(&gold, &gold, Some(&docs)).unwrap()).unwrap();
        assert!(v["per_class"]["Wife_GF"]["partial"]["f1"].is_number());
    }

    #[test]
    fn generation_report() {
        let pairs = vec![(
            vec!["my partner".to_string(), "my significant other".into(), "someone I love".into()],
            vec!["my partner".to_string(), "someone I love".into(), "my significant other".into()],
        )];
        let r = evaluate_generations(&pairs).unwrap();
        assert!((r.bleu - 1.0).abs() < 1e-12);
        assert!((r.rouge_l - 1.0).abs() < 1e-12);
        assert_eq!(r.diversity, 5);
    }
}
