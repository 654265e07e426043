//! Name and Contact detection: too rare for the tagger, so they come from
//! pattern rules and a person recognizer, each filtered by the sentence gate.

use once_cell::sync::Lazy;
use regex::Regex;

use crate::detect::merge::merge_spans;
use crate::detect::plugin::{PatternSet, PersonRecognizer, PluginError, SentenceGate, DEFAULT_CONTACT_RULES};
use crate::detect::segment::SentenceSplitter;
use crate::span::{DisclosureSpan, SpanRange};
use crate::taxonomy::Category;
use crate::text::{char_len, char_slice};

/// Sentence ranges of `text`, falling back to the whole text when the splitter
/// yields nothing.
fn sentences(text: &str, splitter: &dyn SentenceSplitter) -> Vec<SpanRange> {
    let s = splitter.split(text);
    if s.is_empty() {
        SpanRange::new(0, char_len(text)).into_iter().collect()
    } else {
        s
    }
}

fn containing_sentence(sents: &[SpanRange], r: SpanRange) -> Option<SpanRange> {
    sents
        .iter()
        .copied()
        .find(|s| s.start <= r.start && r.start < s.end)
}

/// Gated span check, caching the gate answer per sentence.
struct GateCache<'a> {
    gate: &'a dyn SentenceGate,
    text: &'a str,
    answers: Vec<(SpanRange, bool)>,
}

impl<'a> GateCache<'a> {
    fn new(gate: &'a dyn SentenceGate, text: &'a str) -> Self {
        Self {
            gate,
            text,
            answers: Vec::new(),
        }
    }

    fn allows(&mut self, sentence: SpanRange) -> Result<bool, PluginError> {
        if let Some((_, a)) = self.answers.iter().find(|(s, _)| *s == sentence) {
            return Ok(*a);
        }
        let s = char_slice(self.text, sentence.start, sentence.end).unwrap_or_default();
        let a = self.gate.contains_disclosure(s)?;
        self.answers.push((sentence, a));
        Ok(a)
    }
}

/// Regex-driven contact detector (emails, phone numbers, handle statements).
#[derive(Debug, Clone)]
pub struct ContactDetector {
    rules: PatternSet,
}

impl Default for ContactDetector {
    fn default() -> Self {
        Self {
            rules: PatternSet::from_json(DEFAULT_CONTACT_RULES).expect("bundled contact rules are valid"),
        }
    }
}

impl ContactDetector {
    pub fn new(rules: PatternSet) -> Self {
        Self { rules }
    }

    pub fn version(&self) -> String {
        format!("contact_rules/{}", self.rules.version)
    }

    /// Contact spans in `text`, kept only where the gate accepts the containing sentence.
    pub fn detect(
        &self,
        doc_id: &str,
        text: &str,
        gate: &dyn SentenceGate,
        splitter: &dyn SentenceSplitter,
    ) -> Result<Vec<DisclosureSpan>, PluginError> {
        let sents = sentences(text, splitter);
        let mut gate = GateCache::new(gate, text);
        let mut out = Vec::new();
        for (_, r) in self.rules.matches(text) {
            let Some(sentence) = containing_sentence(&sents, r) else {
                continue;
            };
            if gate.allows(sentence)? {
                out.push(DisclosureSpan::from_text(doc_id, text, r.start, r.end, Category::Contact).expect("match in range"));
            }
        }
        Ok(merge_spans(out))
    }
}

static NAME_LEAD_IN: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)(?:\bmy name is|\bmy name's|\bi'm called|\bi am called|\bthey call me|\bcall me|\bi'm|\bi am|\bthis is)\s+$")
        .unwrap()
});

/// Person names from `ner`, extended left over a self-referential lead-in
/// ("my name is …") and kept only in gated sentences.
pub fn detect_name(
    doc_id: &str,
    text: &str,
    ner: &dyn PersonRecognizer,
    gate: &dyn SentenceGate,
    splitter: &dyn SentenceSplitter,
) -> Result<Vec<DisclosureSpan>, PluginError> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let sents = sentences(text, splitter);
    let mut gate = GateCache::new(gate, text);
    let mut out = Vec::new();
    for entity in ner.persons(text)? {
        if entity.end > char_len(text) {
            return Err(PluginError::Failed(format!(
                "recognizer returned out-of-range entity [{}, {})",
                entity.start, entity.end
            )));
        }
        let Some(sentence) = containing_sentence(&sents, entity) else {
            continue;
        };
        if !gate.allows(sentence)? {
            continue;
        }
        let prefix = char_slice(text, sentence.start, entity.start).unwrap_or_default();
        let start = match NAME_LEAD_IN.find(prefix) {
            Some(m) => sentence.start + char_len(&prefix[..m.start()]),
            None => entity.start,
        };
        out.push(DisclosureSpan::from_text(doc_id, text, start, entity.end, Category::Name).expect("checked range"));
    }
    Ok(merge_spans(out))
}

/// [`ContactDetector::detect`] with the bundled rule file.
pub fn detect_contact(
    doc_id: &str,
    text: &str,
    gate: &dyn SentenceGate,
    splitter: &dyn SentenceSplitter,
) -> Result<Vec<DisclosureSpan>, PluginError> {
    ContactDetector::default().detect(doc_id, text, gate, splitter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::plugin::{ConstGate, FirstPersonGate, PatternPersonRecognizer};
    use crate::detect::segment::RuleSentenceSplitter;

    fn texts(spans: &[DisclosureSpan]) -> Vec<&str> {
        spans.iter().map(|s| s.text.as_str()).collect()
    }

    #[test]
    fn handle_statement() {
        let spans = detect_contact("d", "xxx is my ig", &FirstPersonGate, &RuleSentenceSplitter).unwrap();
        assert_eq!(texts(&spans), vec!["xxx is my ig"]);
        assert_eq!(spans[0].category, Category::Contact);
    }

    #[test]
    fn gate_suppresses_phone() {
        let text = "call 555-0100 for sales";
        assert!(detect_contact("d", text, &ConstGate(false), &RuleSentenceSplitter).unwrap().is_empty());
        // the rule itself does fire
        assert_eq!(
            texts(&detect_contact("d", text, &ConstGate(true), &RuleSentenceSplitter).unwrap()),
            vec!["555-0100"]
        );
    }

    #[test]
    fn email_with_self_reference() {
        let spans = detect_contact("d", "email me at a@b.co", &ConstGate(true), &RuleSentenceSplitter).unwrap();
        assert_eq!(texts(&spans), vec!["email me at a@b.co"]);
    }

    #[test]
    fn gate_is_per_sentence() {
        let text = "Support is at help@corp.com. You can email me at me@x.org.";
        let spans = detect_contact("d", text, &FirstPersonGate, &RuleSentenceSplitter).unwrap();
        assert_eq!(texts(&spans), vec!["email me at me@x.org"]);
    }

    #[test]
    fn name_with_lead_in() {
        let text = "Hello guys, my name is xxx and I love travelling";
        let spans = detect_name("d", text, &PatternPersonRecognizer, &ConstGate(true), &RuleSentenceSplitter).unwrap();
        assert_eq!(texts(&spans), vec!["my name is xxx"]);
        assert_eq!(spans[0].category, Category::Name);
    }

    #[test]
    fn generic_name_suppressed_by_gate() {
        let text = "Taylor Swift released an album";
        assert!(detect_name("d", text, &PatternPersonRecognizer, &ConstGate(false), &RuleSentenceSplitter)
            .unwrap()
            .is_empty());
        assert!(detect_name("d", text, &PatternPersonRecognizer, &FirstPersonGate, &RuleSentenceSplitter)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn empty_text() {
        assert!(detect_name("d", "", &PatternPersonRecognizer, &ConstGate(true), &RuleSentenceSplitter)
            .unwrap()
            .is_empty());
    }

    struct BrokenNer;
    impl PersonRecognizer for BrokenNer {
        fn version(&self) -> String {
            "broken".into()
        }
        fn persons(&self, _: &str) -> Result<Vec<SpanRange>, PluginError> {
            Err(PluginError::Unavailable("model not loaded".into()))
        }
    }

    #[test]
    fn unavailable_recognizer_propagates() {
        let err = detect_name("d", "my name is Al", &BrokenNer, &ConstGate(true), &RuleSentenceSplitter).unwrap_err();
        assert!(matches!(err, PluginError::Unavailable(_)));
    }
}
