//! Inter-annotator agreement: word-set Jaccard ("two agree") and per-post
//! nominal Krippendorff's alpha averaged over posts.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::eval::EvalError;

/// `|A ∩ B| / |A ∪ B|` over word indices marked as disclosure. Two empty sets agree fully.
pub fn two_agree(a1: &BTreeSet<usize>, a2: &BTreeSet<usize>) -> f64 {
    let union = a1.union(a2).count();
    if union == 0 {
        return 1.0;
    }
    a1.intersection(a2).count() as f64 / union as f64
}

/// Nominal alpha for one reliability matrix (`matrix[annotator][unit]`, `None` =
/// missing). Returns `None` when alpha is undefined: fewer than two pairable
/// values, or only one distinct value overall (zero expected disagreement).
pub fn krippendorff_alpha_nominal<T: Eq + Hash + Clone>(matrix: &[Vec<Option<T>>]) -> Option<f64> {
    let units = matrix.iter().map(Vec::len).max().unwrap_or(0);
    let mut values: HashMap<T, usize> = HashMap::new();
    let index = |v: &T, values: &mut HashMap<T, usize>| {
        let next = values.len();
        *values.entry(v.clone()).or_insert(next)
    };

    // coincidence matrix, stored sparsely as (c, k) -> weight
    let mut coincidence: HashMap<(usize, usize), f64> = HashMap::new();
    for u in 0..units {
        let vals: Vec<usize> = matrix
            .iter()
            .filter_map(|row| row.get(u).cloned().flatten())
            .map(|v| index(&v, &mut values))
            .collect();
        let m = vals.len();
        if m < 2 {
            continue;
        }
        let w = 1.0 / (m as f64 - 1.0);
        for (i, &c) in vals.iter().enumerate() {
            for (j, &k) in vals.iter().enumerate() {
                if i != j {
                    *coincidence.entry((c, k)).or_default() += w;
                }
            }
        }
    }

    let mut marginals = vec![0.0; values.len()];
    for (&(c, _), &w) in &coincidence {
        marginals[c] += w;
    }
    let n: f64 = marginals.iter().sum();
    if n < 2.0 {
        return None;
    }
    let observed: f64 = coincidence
        .iter()
        .filter(|((c, k), _)| c != k)
        .map(|(_, w)| w)
        .sum();
    let total_sq: f64 = marginals.iter().map(|m| m * m).sum();
    let expected_pairs = n * n - total_sq;
    if expected_pairs <= 0.0 {
        return None;
    }
    Some(1.0 - (n - 1.0) * observed / expected_pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary {
    /// Unweighted mean of per-post alpha over posts where it is defined.
    pub mean: f64,
    pub posts_used: usize,
    /// Posts with fewer than two annotators or undefined alpha.
    pub posts_skipped: usize,
}

/// Per-post nominal alpha, averaged over posts where alpha is defined.
pub fn mean_krippendorff_alpha<T: Eq + Hash + Clone>(posts: &[Vec<Vec<Option<T>>>]) -> Result<AlphaSummary, EvalError> {
    let eligible = posts.iter().filter(|p| p.len() >= 2).count();
    if eligible == 0 {
        return Err(EvalError::InsufficientAnnotators);
    }
    let alphas: Vec<f64> = posts
        .iter()
        .filter(|p| p.len() >= 2)
        .filter_map(|p| krippendorff_alpha_nominal(p))
        .collect();
    if alphas.is_empty() {
        return Err(EvalError::UndefinedAgreement);
    }
    Ok(AlphaSummary {
        mean: alphas.iter().sum::<f64>() / alphas.len() as f64,
        posts_used: alphas.len(),
        posts_skipped: posts.len() - alphas.len(),
    })
}
