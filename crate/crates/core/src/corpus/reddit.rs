use std::collections::{BTreeMap, HashMap, HashSet};

use once_cell::sync::Lazy;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Posts are kept only when the English score is strictly above this.
pub const ENGLISH_THRESHOLD: f64 = 0.7;

/// Raw exported post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPost {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub over_18: bool,
    #[serde(default)]
    pub removed: bool,
    #[serde(default)]
    pub created_utc: Option<f64>,
    #[serde(default)]
    pub subreddit: Option<String>,
}

impl RawPost {
    pub fn text(&self) -> String {
        if self.body.is_empty() {
            self.title.clone()
        } else {
            format!("{}\n{}", self.title, self.body)
        }
    }
}

/// Probability-like score in `[0, 1]` that a text is English.
pub trait LanguageIdentifier: Send + Sync {
    fn english_score(&self, text: &str) -> f64;
}

static STOPWORDS: Lazy<HashSet<&'static str>> = Lazy::new(|| {
    "a about after all also am an and any are as at be because been but by can could did do does for from had has \
     have he her him his how i if in into is it its just like me more my no not now of on one only or our out she \
     so some than that the their them then there they this to too up us very was we were what when which who will \
     with would you your i'm it's don't"
        .split_whitespace()
        .collect()
});

/// Stopword-density heuristic. A stand-in for a trained identifier; plug a real
/// model in through `LanguageIdentifier` for corpus work.
#[derive(Debug, Default, Clone)]
pub struct StopwordLanguageId;

impl LanguageIdentifier for StopwordLanguageId {
    fn english_score(&self, text: &str) -> f64 {
        let words: Vec<String> = text
            .split(|c: char| !(c.is_alphabetic() || c == '\''))
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .collect();
        if words.is_empty() {
            return 0.0;
        }
        let hits = words.iter().filter(|w| STOPWORDS.contains(w.as_str())).count();
        (hits as f64 / words.len() as f64 * 2.5).min(1.0)
    }
}

/// Scores computed offline, keyed by post id. Unknown ids score 0.
#[derive(Debug, Default, Clone)]
pub struct PrecomputedLanguageScores(pub HashMap<String, f64>);

impl PrecomputedLanguageScores {
    pub fn score_for(&self, id: &str) -> f64 {
        self.0.get(id).copied().unwrap_or(0.0)
    }
}

/// Where a filter run gets its English scores.
pub enum LanguageScores<'a> {
    Model(&'a dyn LanguageIdentifier),
    Precomputed(&'a PrecomputedLanguageScores),
}

impl LanguageScores<'_> {
    fn score(&self, post: &RawPost) -> f64 {
        match self {
            LanguageScores::Model(m) => m.english_score(&post.text()),
            LanguageScores::Precomputed(p) => p.score_for(&post.id),
        }
    }
}

pub const RULE_NSFW: &str = "nsfw";
pub const RULE_REMOVED: &str = "removed";
pub const RULE_LANGUAGE: &str = "language";
pub const MALFORMED: &str = "malformed";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    /// Each dropped record counted once, under the first rule it fails
    /// (nsfw, removed, language) or under `malformed`.
    pub dropped: BTreeMap<String, usize>,
    /// Every rule each record fails; a record can count under several rules.
    pub violations: BTreeMap<String, usize>,
}

impl FilterReport {
    pub fn total_dropped(&self) -> usize {
        self.dropped.values().sum()
    }
}

/// Rules a post violates, in rule order.
pub fn violations(post: &RawPost, scores: &LanguageScores<'_>) -> Vec<&'static str> {
    let mut out = Vec::new();
    if post.over_18 {
        out.push(RULE_NSFW);
    }
    if post.removed || post.body.trim() == "[removed]" {
        out.push(RULE_REMOVED);
    }
    if scores.score(post) <= ENGLISH_THRESHOLD {
        out.push(RULE_LANGUAGE);
    }
    out
}

/// Keeps posts that pass every rule. Kept records are returned as read.
pub fn filter_posts(records: impl IntoIterator<Item = Value>, scores: &LanguageScores<'_>) -> (Vec<Value>, FilterReport) {
    let mut report = FilterReport::default();
    let mut kept = Vec::new();
    for record in records {
        report.input += 1;
        let post: RawPost = match serde_json::from_value(record.clone()) {
            Ok(p) => p,
            Err(_) => {
                *report.dropped.entry(MALFORMED.into()).or_default() += 1;
                *report.violations.entry(MALFORMED.into()).or_default() += 1;
                continue;
            }
        };
        let v = violations(&post, scores);
        for rule in &v {
            *report.violations.entry((*rule).into()).or_default() += 1;
        }
        match v.first() {
            Some(rule) => *report.dropped.entry((*rule).into()).or_default() += 1,
            None => {
                report.kept += 1;
                kept.push(record);
            }
        }
    }
    (kept, report)
}

/// Drops repeated post ids (first occurrence wins), then draws `n` records
/// uniformly without replacement, keeping input order.
pub fn sample_posts(records: Vec<Value>, n: usize, seed: u64) -> Vec<Value> {
    let mut seen = HashSet::new();
    let unique: Vec<Value> = records
        .into_iter()
        .filter(|r| match r.get("id").and_then(Value::as_str) {
            Some(id) => seen.insert(id.to_string()),
            None => true,
        })
        .collect();
    if n >= unique.len() {
        return unique;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, unique.len(), n).into_vec();
    picked.sort_unstable();
    let mut slots: Vec<Option<Value>> = unique.into_iter().map(Some).collect();
    picked.into_iter().filter_map(|i| slots[i].take()).collect()
}
