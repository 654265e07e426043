//! Span-level precision/recall/F1 with exact, partial, and any-overlap matching.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::eval::Prf;
use crate::span::{contains_relation, overlap_len, AnnotationSet, DisclosureSpan, SpanRange};
use crate::taxonomy::Category;

/// A predicted span partially matches a reference when one contains the other and
/// the overlap is strictly more than half the longer span's length.
pub fn partial_match(pred: SpanRange, gold: SpanRange) -> bool {
    if !contains_relation(pred, gold) {
        return false;
    }
    let longer = pred.len().max(gold.len());
    2 * overlap_len(pred, gold) > longer
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanMatchMode {
    /// Identical boundaries.
    Exact,
    /// [`partial_match`].
    Partial,
    /// Any shared code point. Not a reported metric; it upper-bounds the other
    /// two modes and is used as a sanity bound.
    Overlap,
}

impl SpanMatchMode {
    pub fn matches(self, pred: SpanRange, gold: SpanRange) -> bool {
        match self {
            SpanMatchMode::Exact => pred == gold,
            SpanMatchMode::Partial => partial_match(pred, gold),
            SpanMatchMode::Overlap => overlap_len(pred, gold) > 0,
        }
    }
}

/// Size of a maximum one-to-one matching between `pred` and `gold` under `mode`.
///
/// Candidate pairs are tried greedily by descending overlap (ties: earlier
/// predicted start), then augmenting paths repair any greedy choice that blocks a
/// larger matching, so the count is always the optimum.
pub fn match_count(pred: &[SpanRange], gold: &[SpanRange], mode: SpanMatchMode) -> usize {
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); pred.len()];
    for (i, p) in pred.iter().enumerate() {
        let mut cand: Vec<usize> = (0..gold.len()).filter(|&j| mode.matches(*p, gold[j])).collect();
        cand.sort_by_key(|&j| (std::cmp::Reverse(overlap_len(*p, gold[j])), gold[j].start));
        edges[i] = cand;
    }
    let mut order: Vec<usize> = (0..pred.len()).collect();
    order.sort_by_key(|&i| {
        let best = edges[i].first().map_or(0, |&j| overlap_len(pred[i], gold[j]));
        (std::cmp::Reverse(best), pred[i].start)
    });

    let mut gold_owner: Vec<Option<usize>> = vec![None; gold.len()];
    let mut matched = 0;
    for &i in &order {
        let mut seen = vec![false; gold.len()];
        if augment(i, &edges, &mut gold_owner, &mut seen) {
            matched += 1;
        }
    }
    matched
}

fn augment(i: usize, edges: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &j in &edges[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        let free = match owner[j] {
            None => true,
            Some(k) => augment(k, edges, owner, seen),
        };
        if free {
            owner[j] = Some(i);
            return true;
        }
    }
    false
}

/// Raw counts behind a [`Prf`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl MatchCounts {
    pub fn prf(self) -> Prf {
        Prf::from_counts(self.matched, self.matched, self.predicted, self.gold)
    }
}

fn by_doc_and_category(sets: &[AnnotationSet]) -> HashMap<(&str, Category), Vec<SpanRange>> {
    let mut map: HashMap<(&str, Category), Vec<SpanRange>> = HashMap::new();
    for set in sets {
        for s in &set.spans {
            map.entry((s.doc_id.as_str(), s.category)).or_default().push(s.range());
        }
    }
    map
}

/// Per-class match counts over all documents.
pub fn span_counts(
    pred: &[AnnotationSet],
    gold: &[AnnotationSet],
    mode: SpanMatchMode,
) -> BTreeMap<Category, MatchCounts> {
    let p = by_doc_and_category(pred);
    let g = by_doc_and_category(gold);
    let mut out: BTreeMap<Category, MatchCounts> = BTreeMap::new();
    let empty = Vec::new();
    let mut keys: Vec<&(&str, Category)> = p.keys().chain(g.keys()).collect();
    keys.sort();
    keys.dedup();
    for key in keys {
        let ps = p.get(key).unwrap_or(&empty);
        let gs = g.get(key).unwrap_or(&empty);
        let c = out.entry(key.1).or_default();
        c.matched += match_count(ps, gs, mode);
        c.predicted += ps.len();
        c.gold += gs.len();
    }
    out
}

/// Per-class precision, recall and F1 for one matching mode.
pub fn span_prf(pred: &[AnnotationSet], gold: &[AnnotationSet], mode: SpanMatchMode) -> BTreeMap<Category, Prf> {
    span_counts(pred, gold, mode)
        .into_iter()
        .map(|(c, counts)| (c, counts.prf()))
        .collect()
}

/// Groups flat span records into one annotation set per document.
pub fn group_spans(
    spans: impl IntoIterator<Item = DisclosureSpan>,
    annotator_id: &str,
    layer: crate::span::Layer,
) -> Vec<AnnotationSet> {
    let mut order: Vec<String> = Vec::new();
    let mut map: HashMap<String, Vec<DisclosureSpan>> = HashMap::new();
    for s in spans {
        if !map.contains_key(&s.doc_id) {
            order.push(s.doc_id.clone());
        }
        map.entry(s.doc_id.clone()).or_default().push(s);
    }
    order
        .into_iter()
        .map(|doc_id| {
            let mut spans = map.remove(&doc_id).unwrap_or_default();
            spans.sort_by_key(|s| (s.start, s.end));
            AnnotationSet {
                doc_id,
                annotator_id: annotator_id.to_string(),
                spans,
                layer,
            }
        })
        .collect()
}
