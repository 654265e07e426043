//! Pluggable components of the detection pipeline and their default implementations.

use std::collections::HashMap;
use std::sync::Arc;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::Deserialize;
use thiserror::Error;

use crate::detect::bio::{encode_bio, BioLabel, LabeledRange};
use crate::detect::merge::merge_spans;
use crate::detect::segment::Chunk;
use crate::span::{DisclosureSpan, SpanRange};
use crate::taxonomy::Category;
use crate::text::{tokenize, CharMap, Token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PluginError {
    #[error("plugin unavailable: {0}")]
    Unavailable(String),
    #[error("plugin failed: {0}")]
    Failed(String),
}

/// Token offsets (relative to the chunk) and one BIO label per token.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TaggedChunk {
    pub tokens: Vec<Token>,
    pub labels: Vec<BioLabel>,
}

/// A sequence tagger over the 17 tagger categories.
///
/// Implementations backed by subword models label each word with the prediction
/// for its first subtoken; the pipeline only sees word-level offsets and labels.
pub trait Tagger: Send + Sync {
    fn version(&self) -> String;
    fn tag(&self, chunk: &Chunk) -> Result<TaggedChunk, PluginError>;
    /// Whether `tag` may be called from several threads at once.
    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// Binary sentence classifier: does this sentence contain a self-disclosure?
pub trait SentenceGate: Send + Sync {
    fn version(&self) -> String;
    fn contains_disclosure(&self, sentence: &str) -> Result<bool, PluginError>;
    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// Person-entity recognizer; returns entity ranges in code points.
pub trait PersonRecognizer: Send + Sync {
    fn version(&self) -> String;
    fn persons(&self, text: &str) -> Result<Vec<SpanRange>, PluginError>;
    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// Emits no spans.
#[derive(Debug, Default, Clone)]
pub struct NullTagger;

impl Tagger for NullTagger {
    fn version(&self) -> String {
        "none".into()
    }

    fn tag(&self, chunk: &Chunk) -> Result<TaggedChunk, PluginError> {
        let tokens = tokenize(&chunk.text);
        let labels = vec![BioLabel::O; tokens.len()];
        Ok(TaggedChunk { tokens, labels })
    }
}

/// Replays known gold spans; used to check the pipeline end to end.
#[derive(Debug, Default, Clone)]
pub struct OracleTagger {
    gold: HashMap<String, Vec<DisclosureSpan>>,
}

impl OracleTagger {
    pub fn new(gold: impl IntoIterator<Item = DisclosureSpan>) -> Self {
        let mut map: HashMap<String, Vec<DisclosureSpan>> = HashMap::new();
        for s in gold {
            map.entry(s.doc_id.clone()).or_default().push(s);
        }
        Self { gold: map }
    }
}

impl Tagger for OracleTagger {
    fn version(&self) -> String {
        "oracle".into()
    }

    fn tag(&self, chunk: &Chunk) -> Result<TaggedChunk, PluginError> {
        let tokens = tokenize(&chunk.text);
        let range = chunk.range();
        let local: Vec<LabeledRange> = self
            .gold
            .get(&chunk.doc_id)
            .into_iter()
            .flatten()
            .filter(|s| !s.category.is_fallback_only())
            .filter_map(|s| {
                let start = s.start.max(range.start);
                let end = s.end.min(range.end);
                SpanRange::new(start - range.start, end.checked_sub(range.start)?).map(|r| LabeledRange {
                    range: r,
                    category: s.category,
                })
            })
            .collect();
        let labels = encode_bio(&tokens, &local).map_err(|e| PluginError::Failed(e.to_string()))?;
        Ok(TaggedChunk { tokens, labels })
    }
}

#[derive(Debug, Deserialize)]
struct PatternFile {
    version: String,
    rules: Vec<PatternRuleSpec>,
}

#[derive(Debug, Deserialize)]
struct PatternRuleSpec {
    id: String,
    #[serde(default)]
    category: Option<Category>,
    pattern: String,
}

#[derive(Debug, Clone)]
pub struct PatternRule {
    pub id: String,
    pub category: Option<Category>,
    pub regex: Regex,
}

/// A versioned list of regex rules loaded from JSON.
#[derive(Debug, Clone)]
pub struct PatternSet {
    pub version: String,
    pub rules: Vec<PatternRule>,
}

impl PatternSet {
    pub fn from_json(json: &str) -> Result<Self, PluginError> {
        let file: PatternFile =
            serde_json::from_str(json).map_err(|e| PluginError::Unavailable(format!("pattern file: {e}")))?;
        let rules = file
            .rules
            .into_iter()
            .map(|r| {
                let regex = Regex::new(&r.pattern)
                    .map_err(|e| PluginError::Unavailable(format!("rule `{}`: {e}", r.id)))?;
                Ok(PatternRule {
                    id: r.id,
                    category: r.category,
                    regex,
                })
            })
            .collect::<Result<Vec<_>, PluginError>>()?;
        Ok(Self {
            version: file.version,
            rules,
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, PluginError> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| PluginError::Unavailable(format!("{}: {e}", path.display())))?;
        Self::from_json(&json)
    }

    /// All rule matches as `(rule index, code-point range)`.
    pub fn matches(&self, text: &str) -> Vec<(usize, SpanRange)> {
        let map = CharMap::new(text);
        let mut out = Vec::new();
        for (i, rule) in self.rules.iter().enumerate() {
            for m in rule.regex.find_iter(text) {
                if let Some(r) = SpanRange::new(map.to_char(m.start()), map.to_char(m.end())) {
                    out.push((i, r));
                }
            }
        }
        out
    }
}

pub const DEFAULT_TAGGER_PATTERNS: &str = include_str!("../../assets/tagger_patterns.json");
pub const DEFAULT_CONTACT_RULES: &str = include_str!("../../assets/contact_rules.json");

static DEFAULT_TAGGER_SET: Lazy<PatternSet> =
    Lazy::new(|| PatternSet::from_json(DEFAULT_TAGGER_PATTERNS).expect("bundled tagger patterns are valid"));

/// A lexical tagger built from first-person regex rules. Useful offline and as a
/// baseline; a trained model plugs in through the same trait.
#[derive(Debug, Clone)]
pub struct PatternTagger {
    patterns: PatternSet,
}

impl Default for PatternTagger {
    fn default() -> Self {
        Self {
            patterns: DEFAULT_TAGGER_SET.clone(),
        }
    }
}

impl PatternTagger {
    pub fn new(patterns: PatternSet) -> Self {
        Self { patterns }
    }
}

impl Tagger for PatternTagger {
    fn version(&self) -> String {
        format!("pattern/{}", self.patterns.version)
    }

    fn tag(&self, chunk: &Chunk) -> Result<TaggedChunk, PluginError> {
        let tokens = tokenize(&chunk.text);
        let candidates: Vec<DisclosureSpan> = self
            .patterns
            .matches(&chunk.text)
            .into_iter()
            .filter_map(|(i, r)| {
                let cat = self.patterns.rules[i].category?;
                (!cat.is_fallback_only()).then_some(DisclosureSpan {
                    doc_id: String::new(),
                    start: r.start,
                    end: r.end,
                    category: cat,
                    text: String::new(),
                })
            })
            .collect();
        let ranges: Vec<LabeledRange> = merge_spans(candidates).iter().map(LabeledRange::from).collect();
        let labels = encode_bio(&tokens, &ranges).map_err(|e| PluginError::Failed(e.to_string()))?;
        Ok(TaggedChunk { tokens, labels })
    }
}

static FIRST_PERSON: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)\b(?:i|i'm|im|i've|i'd|me|my|mine|myself|we|our|us)\b").unwrap());

/// Heuristic gate: a sentence can only disclose something about its author if it
/// refers to the author.
#[derive(Debug, Default, Clone)]
pub struct FirstPersonGate;

impl SentenceGate for FirstPersonGate {
    fn version(&self) -> String {
        "first_person/1".into()
    }

    fn contains_disclosure(&self, sentence: &str) -> Result<bool, PluginError> {
        Ok(FIRST_PERSON.is_match(sentence))
    }
}

/// Gate with a fixed answer.
#[derive(Debug, Clone, Copy)]
pub struct ConstGate(pub bool);

impl SentenceGate for ConstGate {
    fn version(&self) -> String {
        format!("const/{}", self.0)
    }

    fn contains_disclosure(&self, _sentence: &str) -> Result<bool, PluginError> {
        Ok(self.0)
    }
}

static NAME_INTRO: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i:\bmy name is|\bmy name's|\bi'm called|\bi am called|\bcall me|\bthey call me)\s+([\p{L}][\p{L}'\-]*)").unwrap()
});
static CAPITALIZED_RUN: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"\b\p{Lu}\p{Ll}+(?:\s+\p{Lu}\p{Ll}+)+\b").unwrap());

/// Rule-based person recognizer: names introduced by "my name is …" and runs of
/// two or more capitalized words.
#[derive(Debug, Default, Clone)]
pub struct PatternPersonRecognizer;

impl PersonRecognizer for PatternPersonRecognizer {
    fn version(&self) -> String {
        "pattern/1".into()
    }

    fn persons(&self, text: &str) -> Result<Vec<SpanRange>, PluginError> {
        let map = CharMap::new(text);
        let mut out = Vec::new();
        for caps in NAME_INTRO.captures_iter(text) {
            let m = caps.get(1).expect("group 1");
            out.extend(SpanRange::new(map.to_char(m.start()), map.to_char(m.end())));
        }
        for m in CAPITALIZED_RUN.find_iter(text) {
            let r = SpanRange::new_unchecked(map.to_char(m.start()), map.to_char(m.end()));
            if out.iter().all(|o: &SpanRange| o.end <= r.start || r.end <= o.start) {
                out.push(r);
            }
        }
        out.sort();
        Ok(out)
    }
}

/// Named plugin instances resolved from configuration.
#[derive(Clone)]
pub struct PluginRegistry {
    taggers: HashMap<String, Arc<dyn Tagger>>,
    gates: HashMap<String, Arc<dyn SentenceGate>>,
    recognizers: HashMap<String, Arc<dyn PersonRecognizer>>,
}

impl Default for PluginRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

impl PluginRegistry {
    pub fn empty() -> Self {
        Self {
            taggers: HashMap::new(),
            gates: HashMap::new(),
            recognizers: HashMap::new(),
        }
    }

    pub fn with_defaults() -> Self {
        let mut reg = Self::empty();
        reg.register_tagger("none", Arc::new(NullTagger));
        reg.register_tagger("pattern", Arc::new(PatternTagger::default()));
        reg.register_gate("first_person", Arc::new(FirstPersonGate));
        reg.register_gate("always", Arc::new(ConstGate(true)));
        reg.register_gate("never", Arc::new(ConstGate(false)));
        reg.register_recognizer("pattern", Arc::new(PatternPersonRecognizer));
        reg
    }

    pub fn register_tagger(&mut self, name: &str, tagger: Arc<dyn Tagger>) {
        self.taggers.insert(name.to_string(), tagger);
    }

    pub fn register_gate(&mut self, name: &str, gate: Arc<dyn SentenceGate>) {
        self.gates.insert(name.to_string(), gate);
    }

    pub fn register_recognizer(&mut self, name: &str, ner: Arc<dyn PersonRecognizer>) {
        self.recognizers.insert(name.to_string(), ner);
    }

    pub fn tagger(&self, name: &str) -> Result<Arc<dyn Tagger>, PluginError> {
        self.taggers
            .get(name)
            .cloned()
            .ok_or_else(|| PluginError::Unavailable(format!("no tagger named `{name}`")))
    }

    pub fn gate(&self, name: &str) -> Result<Arc<dyn SentenceGate>, PluginError> {
        self.gates
            .get(name)
            .cloned()
            .ok_or_else(|| PluginError::Unavailable(format!("no sentence gate named `{name}`")))
    }

    pub fn recognizer(&self, name: &str) -> Result<Arc<dyn PersonRecognizer>, PluginError> {
        self.recognizers
            .get(name)
            .cloned()
            .ok_or_else(|| PluginError::Unavailable(format!("no person recognizer named `{name}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::bio::decode_bio;
    use crate::detect::segment::SegmentStrategy;

    fn chunk(text: &str) -> Chunk {
        Chunk {
            doc_id: "d".into(),
            index: 0,
            start_offset: 0,
            text: text.into(),
            strategy: SegmentStrategy::Whole,
        }
    }

    fn tagged(text: &str) -> Vec<(Category, String)> {
        let c = chunk(text);
        let out = PatternTagger::default().tag(&c).unwrap();
        decode_bio(&out.labels, &out.tokens, &c)
            .unwrap()
            .into_iter()
            .map(|s| (s.category, s.text))
            .collect()
    }

    #[test]
    fn pattern_tagger_motivating_example() {
        let spans = tagged("Im 16F I think I want to be a bi M");
        let cats: Vec<Category> = spans.iter().map(|s| s.0).collect();
        assert!(cats.contains(&Category::AgeGender), "{spans:?}");
        assert!(cats.contains(&Category::SexualOrientation), "{spans:?}");
    }

    #[test]
    fn pattern_tagger_taxonomy_examples() {
        assert_eq!(tagged("I live in the UK and a diagnosis is expensive")[0], (Category::Location, "I live in the UK".into()));
        assert_eq!(tagged("My gf and I applied")[0], (Category::WifeGF, "My gf".into()));
        assert_eq!(tagged("My husband and I vote differently")[0], (Category::HusbandBF, "My husband".into()));
        assert_eq!(tagged("I am a 23-year-old student")[0].0, Category::Age);
        assert_eq!(tagged("Hi, I have two musk turtles and")[0], (Category::Pet, "I have two musk turtles".into()));
    }

    #[test]
    fn pattern_tagger_never_emits_fallback_categories() {
        let c = chunk("xxx is my ig and my name is Bob");
        let out = PatternTagger::default().tag(&c).unwrap();
        assert!(out.labels.iter().all(|l| l.category().map_or(true, |c| !c.is_fallback_only())));
    }

    #[test]
    fn oracle_tagger_clips_to_chunk() {
        let text = "I am 23. My gf is here.";
        let gold = vec![
            DisclosureSpan::from_text("d", text, 0, 7, Category::Age).unwrap(),
            DisclosureSpan::from_text("d", text, 9, 14, Category::WifeGF).unwrap(),
        ];
        let tagger = OracleTagger::new(gold);
        let second = Chunk {
            doc_id: "d".into(),
            index: 1,
            start_offset: 9,
            text: "My gf is here.".into(),
            strategy: SegmentStrategy::Sentence,
        };
        let out = tagger.tag(&second).unwrap();
        let spans = decode_bio(&out.labels, &out.tokens, &second).unwrap();
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].start, spans[0].end, spans[0].text.as_str()), (9, 14, "My gf"));
    }

    #[test]
    fn recognizer_finds_introduced_and_capitalized_names() {
        let text = "my name is xxx and I met Taylor Swift";
        let r = PatternPersonRecognizer.persons(text).unwrap();
        let names: Vec<&str> = r
            .iter()
            .map(|r| crate::text::char_slice(text, r.start, r.end).unwrap())
            .collect();
        assert_eq!(names, vec!["xxx", "Taylor Swift"]);
    }

    #[test]
    fn registry_lookup() {
        let reg = PluginRegistry::with_defaults();
        assert!(reg.tagger("pattern").is_ok());
        assert!(matches!(reg.tagger("bert"), Err(PluginError::Unavailable(_))));
        assert!(reg.gate("first_person").is_ok());
        assert!(reg.recognizer("pattern").is_ok());
    }
}
