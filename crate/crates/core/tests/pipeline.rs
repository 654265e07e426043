use std::sync::Arc;

use disclose_core::abstraction::{
    build_distillation_corpus, distillation_items, generate_abstractions, DistillRecord, GenerateOptions, Strategy,
};
use disclose_core::corpus::{read_jsonl_path, write_jsonl_atomic};
use disclose_core::detect::{Detector, PluginRegistry, RuleSentenceSplitter};
use disclose_core::importance::{rate_span, RatingRecord};
use disclose_core::llm::{LlmClient, OfflineProvider, ScriptedProvider};
use disclose_core::{apply_edit, AnnotationSet, Category, DisclosureSpan, Document, Layer, Thread};

const TEACHER_ANSWER: &str = "Rationale: the exact age narrows things down.\n\
Generalized Spans: {\"span 1\": \"recently had a birthday\", \"span 2\": \"am in my thirties\", \"span 3\": \"had a birthday lately\"}";

fn gold_for(doc: &Document) -> AnnotationSet {
    let mut set = AnnotationSet::new(doc.id.clone(), "gold", Layer::Gold);
    set.spans.push(DisclosureSpan::new(doc, 2, 27, Category::Age).unwrap());
    set
}

#[test]
fn distill_records_round_trip_through_jsonl() {
    let doc = Document::body("d1", "t1", "I just turned 32 last month. Any advice?");
    let items = distillation_items(&[doc.clone()], &[gold_for(&doc)], &RuleSentenceSplitter).unwrap();
    assert_eq!(items.len(), 1);
    assert_eq!(items[0].sentence, "I just turned 32 last month.");

    let teacher = LlmClient::new(Arc::new(ScriptedProvider::new([Ok(TEACHER_ANSWER.to_string())])), "teacher-1");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("corpus.jsonl");
    let summary = build_distillation_corpus(&items, &teacher, 0.0, &out).unwrap();
    assert_eq!(summary.written, 1);

    let records: Vec<DistillRecord> = read_jsonl_path(&out).unwrap();
    assert_eq!(records.len(), 1);
    let r = &records[0];
    assert_eq!(r.span_text, "just turned 32 last month");
    assert_eq!((r.span_start, r.span_end), (2, 27));
    assert_eq!(r.candidates.len(), 3);
    assert_eq!(r.teacher_id, "teacher-1");
    assert!(r.rationale.as_deref().unwrap().contains("exact age"));

    let copy = dir.path().join("copy.jsonl");
    write_jsonl_atomic(&copy, &records).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&copy).unwrap());

    // a second run finds the record and asks the teacher nothing
    let idle = LlmClient::new(Arc::new(ScriptedProvider::new([])), "teacher-1");
    let again = build_distillation_corpus(&items, &idle, 0.0, &out).unwrap();
    assert_eq!((again.written, again.already_present), (0, 1));
    assert_eq!(idle.provider_calls(), 0);
}

#[test]
fn detect_rate_abstract_apply() {
    let title = Document::title("p-title", "p", "Anyone else switching careers?");
    let body = Document::body("p-body", "p", "I live in Denver and my wife is a teacher. xxx is my ig");
    let thread = Thread::new("p", vec![title, body.clone()]).unwrap();
    let detector = Detector::from_config(&Default::default(), &PluginRegistry::with_defaults()).unwrap();
    let spans = detector.detect(&body).unwrap().spans;
    assert!(spans.iter().any(|s| s.category == Category::Contact), "{spans:?}");
    for s in &spans {
        s.validate_against(&body).unwrap();
    }

    let client = LlmClient::new(Arc::new(OfflineProvider), "offline");
    let rating = rate_span(&spans[0], &thread, &client, false).unwrap();
    let record = RatingRecord::from(&rating);
    assert_eq!((record.span_start, record.span_end), (spans[0].start, spans[0].end));

    let target = spans.iter().find(|s| s.category != Category::Contact).unwrap_or(&spans[0]);
    let set = generate_abstractions(
        &body,
        target,
        Strategy::EndToEnd,
        &GenerateOptions::default(),
        &RuleSentenceSplitter,
        &client,
    )
    .unwrap();
    assert_eq!(set.candidates.len(), 3);
    let (edited, new_end) = apply_edit(&body.text, target.start, target.end, &set.candidates[0]).unwrap();
    assert!(edited.starts_with(&body.text.chars().take(target.start).collect::<String>()));
    assert!(edited.ends_with(&body.text.chars().skip(target.end).collect::<String>()));
    assert_eq!(new_end, target.start + set.candidates[0].chars().count());
}
