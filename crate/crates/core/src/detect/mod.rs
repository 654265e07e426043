//! Self-disclosure detection: segmentation, sequence tagging through a BIO codec,
//! pattern/NER fallback for `Name` and `Contact`, and span merging.

mod bio;
mod fallback;
mod merge;
mod plugin;
mod segment;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bio::{decode_bio, decode_bio_ranges, encode_bio, BioError, BioLabel, LabeledRange};
pub use fallback::{detect_contact, detect_name, ContactDetector};
pub use merge::merge_spans;
pub use plugin::{
    ConstGate, FirstPersonGate, NullTagger, OracleTagger, PatternPersonRecognizer, PatternRule, PatternSet,
    PatternTagger, PersonRecognizer, PluginError, PluginRegistry, SentenceGate, TaggedChunk, Tagger,
    DEFAULT_CONTACT_RULES, DEFAULT_TAGGER_PATTERNS,
};
pub use segment::{segment, Chunk, RuleSentenceSplitter, SegmentStrategy, SentenceSplitter};

use crate::document::{Document, DocumentError};
use crate::span::{AnnotationSet, DisclosureSpan, Layer};
use crate::text::char_len;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("tagger failed on chunk {chunk_id}: {source}")]
    Tagger { chunk_id: String, source: PluginError },
    #[error("tagger returned invalid output for chunk {chunk_id}: {reason}")]
    InvalidTaggerOutput { chunk_id: String, reason: String },
    #[error(transparent)]
    Plugin(#[from] PluginError),
    #[error("configuration error: {0}")]
    Config(String),
}

/// `[detection]` configuration section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub strategy: SegmentStrategy,
    pub tagger: String,
    pub gate: String,
    pub ner: String,
    pub contact_rules_path: Option<PathBuf>,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            strategy: SegmentStrategy::Sentence,
            tagger: "pattern".into(),
            gate: "first_person".into(),
            ner: "pattern".into(),
            contact_rules_path: None,
        }
    }
}

/// Serializes calls into plugins that are not safe to call concurrently.
struct Guarded<T: ?Sized> {
    inner: Arc<T>,
    lock: Option<Mutex<()>>,
}

impl<T: ?Sized> Guarded<T> {
    fn new(inner: Arc<T>, concurrent_safe: bool) -> Self {
        Self {
            inner,
            lock: (!concurrent_safe).then(|| Mutex::new(())),
        }
    }

    fn call<R>(&self, f: impl FnOnce(&T) -> R) -> R {
        let _guard = self.lock.as_ref().map(|m| m.lock().unwrap_or_else(|p| p.into_inner()));
        f(&self.inner)
    }
}

/// Adapts a guarded gate back into the trait for the fallback detectors.
struct GuardedGate<'a>(&'a Guarded<dyn SentenceGate>);

impl SentenceGate for GuardedGate<'_> {
    fn version(&self) -> String {
        self.0.call(|g| g.version())
    }

    fn contains_disclosure(&self, sentence: &str) -> Result<bool, PluginError> {
        self.0.call(|g| g.contains_disclosure(sentence))
    }
}

struct GuardedNer<'a>(&'a Guarded<dyn PersonRecognizer>);

impl PersonRecognizer for GuardedNer<'_> {
    fn version(&self) -> String {
        self.0.call(|g| g.version())
    }

    fn persons(&self, text: &str) -> Result<Vec<crate::span::SpanRange>, PluginError> {
        self.0.call(|g| g.persons(text))
    }
}

/// The assembled detection pipeline. Immutable once built; `detect` takes `&self`.
pub struct Detector {
    strategy: SegmentStrategy,
    splitter: Arc<dyn SentenceSplitter>,
    tagger: Guarded<dyn Tagger>,
    gate: Guarded<dyn SentenceGate>,
    ner: Guarded<dyn PersonRecognizer>,
    contact: ContactDetector,
}

impl Detector {
    pub fn from_config(config: &DetectConfig, registry: &PluginRegistry) -> Result<Self, DetectError> {
        let cfg_err = |e: PluginError| DetectError::Config(e.to_string());
        let tagger = registry.tagger(&config.tagger).map_err(cfg_err)?;
        let gate = registry.gate(&config.gate).map_err(cfg_err)?;
        let ner = registry.recognizer(&config.ner).map_err(cfg_err)?;
        let contact = match &config.contact_rules_path {
            Some(p) => ContactDetector::new(PatternSet::from_path(p).map_err(cfg_err)?),
            None => ContactDetector::default(),
        };
        Ok(Self::new(config.strategy, tagger, gate, ner, contact))
    }

    pub fn new(
        strategy: SegmentStrategy,
        tagger: Arc<dyn Tagger>,
        gate: Arc<dyn SentenceGate>,
        ner: Arc<dyn PersonRecognizer>,
        contact: ContactDetector,
    ) -> Self {
        let tagger_safe = tagger.concurrent_safe();
        let gate_safe = gate.concurrent_safe();
        let ner_safe = ner.concurrent_safe();
        Self {
            strategy,
            splitter: Arc::new(RuleSentenceSplitter),
            tagger: Guarded::new(tagger, tagger_safe),
            gate: Guarded::new(gate, gate_safe),
            ner: Guarded::new(ner, ner_safe),
            contact,
        }
    }

    pub fn with_splitter(mut self, splitter: Arc<dyn SentenceSplitter>) -> Self {
        self.splitter = splitter;
        self
    }

    pub fn strategy(&self) -> SegmentStrategy {
        self.strategy
    }

    pub fn splitter(&self) -> &dyn SentenceSplitter {
        self.splitter.as_ref()
    }

    pub fn model_versions(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("tagger".to_string(), self.tagger.call(|t| t.version())),
            ("gate".to_string(), self.gate.call(|g| g.version())),
            ("ner".to_string(), self.ner.call(|n| n.version())),
            ("contact_rules".to_string(), self.contact.version()),
            ("segmentation".to_string(), self.strategy.to_string()),
        ])
    }

    fn tag_chunk(&self, chunk: &Chunk) -> Result<Vec<DisclosureSpan>, DetectError> {
        let out = self.tagger.call(|t| t.tag(chunk)).map_err(|source| DetectError::Tagger {
            chunk_id: chunk.id(),
            source,
        })?;
        let invalid = |reason: String| DetectError::InvalidTaggerOutput {
            chunk_id: chunk.id(),
            reason,
        };
        if out.labels.len() != out.tokens.len() {
            return Err(invalid(format!("{} labels for {} tokens", out.labels.len(), out.tokens.len())));
        }
        let len = char_len(&chunk.text);
        let mut prev_end = 0;
        for tok in &out.tokens {
            if tok.start > tok.end || tok.end > len || tok.start < prev_end {
                return Err(invalid(format!("token [{}, {}) out of order or outside chunk", tok.start, tok.end)));
            }
            prev_end = tok.end;
        }
        if let Some(c) = out.labels.iter().filter_map(|l| l.category()).find(|c| c.is_fallback_only()) {
            return Err(invalid(format!("tagger emitted reserved category {c}")));
        }
        decode_bio(&out.labels, &out.tokens, chunk).map_err(|e| invalid(e.to_string()))
    }

    /// Runs the full pipeline over one document.
    pub fn detect(&self, doc: &Document) -> Result<AnnotationSet, DetectError> {
        doc.validate_for_detection()?;
        let mut spans = Vec::new();
        for chunk in segment(doc, self.strategy, self.splitter.as_ref()) {
            spans.extend(self.tag_chunk(&chunk)?);
        }
        let gate = GuardedGate(&self.gate);
        spans.extend(self.contact.detect(&doc.id, &doc.text, &gate, self.splitter.as_ref())?);
        spans.extend(detect_name(
            &doc.id,
            &doc.text,
            &GuardedNer(&self.ner),
            &gate,
            self.splitter.as_ref(),
        )?);

        Ok(AnnotationSet {
            doc_id: doc.id.clone(),
            annotator_id: format!("detector:{}", self.tagger.call(|t| t.version())),
            spans: merge_spans(spans),
            layer: Layer::Predicted,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::Category;
    use crate::text::Token;

    fn detector(tagger: Arc<dyn Tagger>) -> Detector {
        Detector::new(
            SegmentStrategy::Sentence,
            tagger,
            Arc::new(FirstPersonGate),
            Arc::new(PatternPersonRecognizer),
            ContactDetector::default(),
        )
    }

    #[test]
    fn contact_only_document() {
        let doc = Document::comment("c1", "t1", "xxx is my ig", None);
        let set = detector(Arc::new(NullTagger)).detect(&doc).unwrap();
        assert_eq!(set.spans.len(), 1);
        assert_eq!(set.spans[0].category, Category::Contact);
        assert_eq!(set.layer, Layer::Predicted);
    }

    #[test]
    fn oracle_tagger_reproduces_gold() {
        let text = "I live in the UK. My gf and I applied, we're new. Also xxx is my ig";
        let doc = Document::body("b1", "t1", text);
        let gold = vec![
            DisclosureSpan::new(&doc, 0, 16, Category::Location).unwrap(),
            DisclosureSpan::new(&doc, 18, 23, Category::WifeGF).unwrap(),
            DisclosureSpan::new(&doc, 55, 67, Category::Contact).unwrap(),
        ];
        let set = detector(Arc::new(OracleTagger::new(gold.clone()))).detect(&doc).unwrap();
        assert_eq!(set.spans, gold);
    }

    #[test]
    fn default_config_resolves() {
        let d = Detector::from_config(&DetectConfig::default(), &PluginRegistry::with_defaults()).unwrap();
        let doc = Document::body("b", "t", "Im 16F I think I want to be a bi M");
        let set = d.detect(&doc).unwrap();
        assert!(set.spans.len() >= 2);
        assert!(set.is_normalized());
        for s in &set.spans {
            s.validate_against(&doc).unwrap();
        }
    }

    #[test]
    fn unknown_plugin_is_config_error() {
        let cfg = DetectConfig {
            ner: "luke".into(),
            ..DetectConfig::default()
        };
        assert!(matches!(
            Detector::from_config(&cfg, &PluginRegistry::with_defaults()),
            Err(DetectError::Config(_))
        ));
    }

    struct FailingTagger;
    impl Tagger for FailingTagger {
        fn version(&self) -> String {
            "fail".into()
        }
        fn tag(&self, chunk: &Chunk) -> Result<TaggedChunk, PluginError> {
            if chunk.index == 1 {
                Err(PluginError::Failed("oom".into()))
            } else {
                NullTagger.tag(chunk)
            }
        }
    }

    #[test]
    fn tagger_failure_carries_chunk_id() {
        let doc = Document::body("b9", "t", "First. Second.");
        match detector(Arc::new(FailingTagger)).detect(&doc) {
            Err(DetectError::Tagger { chunk_id, .. }) => assert_eq!(chunk_id, "b9#1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    struct BadOffsets;
    impl Tagger for BadOffsets {
        fn version(&self) -> String {
            "bad".into()
        }
        fn tag(&self, _chunk: &Chunk) -> Result<TaggedChunk, PluginError> {
            Ok(TaggedChunk {
                tokens: vec![Token { start: 0, end: 999 }],
                labels: vec![BioLabel::B(Category::Age)],
            })
        }
    }

    #[test]
    fn out_of_chunk_offsets_rejected() {
        let doc = Document::body("b", "t", "short");
        assert!(matches!(
            detector(Arc::new(BadOffsets)).detect(&doc),
            Err(DetectError::InvalidTaggerOutput { .. })
        ));
    }

    struct NotThreadSafe(std::sync::atomic::AtomicUsize);
    impl Tagger for NotThreadSafe {
        fn version(&self) -> String {
            "nts".into()
        }
        fn concurrent_safe(&self) -> bool {
            false
        }
        fn tag(&self, chunk: &Chunk) -> Result<TaggedChunk, PluginError> {
            use std::sync::atomic::Ordering;
            let inflight = self.0.fetch_add(1, Ordering::SeqCst);
            std::thread::sleep(std::time::Duration::from_millis(2));
            self.0.fetch_sub(1, Ordering::SeqCst);
            if inflight != 0 {
                return Err(PluginError::Failed("concurrent call".into()));
            }
            NullTagger.tag(chunk)
        }
    }

    #[test]
    fn unsafe_plugins_are_serialized() {
        let d = Arc::new(detector(Arc::new(NotThreadSafe(Default::default()))));
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let d = Arc::clone(&d);
                std::thread::spawn(move || {
                    let doc = Document::body(format!("b{i}"), "t", "One. Two. Three.");
                    d.detect(&doc).map(|_| ())
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap().unwrap();
        }
    }

    #[test]
    fn deterministic() {
        let d = Detector::from_config(&DetectConfig::default(), &PluginRegistry::with_defaults()).unwrap();
        let doc = Document::body("b", "t", "My husband and I live in the UK. Email me at a@b.co please.");
        assert_eq!(d.detect(&doc).unwrap(), d.detect(&doc).unwrap());
    }
}
