use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::abstraction::generate::containing_sentence;
use crate::abstraction::parse::parse_candidates;
use crate::abstraction::template::{bindings, build_prompt, TemplateId};
use crate::abstraction::AbstractError;
use crate::detect::SentenceSplitter;
use crate::document::Document;
use crate::llm::{CachePolicy, LlmClient, LlmError};
use crate::span::{AnnotationSet, SpanRange};
use crate::text::char_slice;

/// One teacher output used as abstraction training data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistillRecord {
    pub sentence: String,
    pub span_start: usize,
    pub span_end: usize,
    pub span_text: String,
    pub rationale: Option<String>,
    pub candidates: Vec<String>,
    pub teacher_id: String,
    pub template_id: String,
}

/// A span to abstract, with offsets relative to `sentence`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistillItem {
    pub sentence: String,
    pub span: SpanRange,
}

impl DistillItem {
    fn key(&self) -> (String, usize, usize) {
        (self.sentence.clone(), self.span.start, self.span.end)
    }
}

/// Collects sentence-level items from documents and their gold spans. Spans that
/// cross a sentence boundary are logged and left out.
pub fn distillation_items(
    docs: &[Document],
    gold: &[AnnotationSet],
    splitter: &dyn SentenceSplitter,
) -> Result<Vec<DistillItem>, AbstractError> {
    let mut items = Vec::new();
    for set in gold {
        let Some(doc) = docs.iter().find(|d| d.id == set.doc_id) else {
            log::warn!("no document text for {}", set.doc_id);
            continue;
        };
        for span in &set.spans {
            match containing_sentence(doc, span, splitter) {
                Ok(s) => items.push(DistillItem {
                    sentence: char_slice(&doc.text, s.start, s.end).unwrap_or_default().to_string(),
                    span: SpanRange::new(span.start - s.start, span.end - s.start).expect("non-empty span"),
                }),
                Err(AbstractError::CrossesSentence { .. }) => {
                    log::warn!("skipping {}:{}-{}: crosses a sentence boundary", doc.id, span.start, span.end)
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(items)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistillSummary {
    pub written: usize,
    pub already_present: usize,
    /// `(item index, reason)` for outputs that failed to parse.
    pub skipped: Vec<(usize, String)>,
    /// Set when the provider gave up and the run stopped early.
    pub aborted: Option<String>,
}

fn existing_keys(path: &Path) -> Result<HashSet<(String, usize, usize)>, AbstractError> {
    let mut keys = HashSet::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(keys),
        Err(e) => return Err(AbstractError::Io(e.to_string())),
    };
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| AbstractError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<DistillRecord>(&line) {
            Ok(r) => {
                keys.insert((r.sentence, r.span_start, r.span_end));
            }
            // a torn final line from an interrupted run; the item is redone
            Err(e) => log::warn!("{}:{}: unreadable record: {e}", path.display(), n + 1),
        }
    }
    Ok(keys)
}

/// Prompts the teacher for each item and appends one record per parsed answer to
/// `out`. Items already in `out` are skipped, so an interrupted run can resume.
/// One writer per output file.
pub fn build_distillation_corpus(
    items: &[DistillItem],
    teacher: &LlmClient,
    temperature: f64,
    out: &Path,
) -> Result<DistillSummary, AbstractError> {
    let mut done = existing_keys(out)?;
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(out)
        .map_err(|e| AbstractError::Io(format!("{}: {e}", out.display())))?;
    let mut summary = DistillSummary::default();
    let id = TemplateId::DistillTeacher;
    for (i, item) in items.iter().enumerate() {
        if done.contains(&item.key()) {
            summary.already_present += 1;
            continue;
        }
        let span_text = char_slice(&item.sentence, item.span.start, item.span.end)
            .ok_or_else(|| AbstractError::Io(format!("item {i}: span outside its sentence")))?;
        let prompt = build_prompt(id, &bindings([("sentence", item.sentence.as_str()), ("span", span_text)]))?;
        let raw = match teacher.complete(&teacher.request(id.as_str(), prompt, temperature), CachePolicy::Default) {
            Ok(raw) => raw,
            Err(e @ (LlmError::Exhausted { .. } | LlmError::Auth(_))) => {
                summary.aborted = Some(e.to_string());
                break;
            }
            Err(e) => {
                log::warn!("item {i}: {e}");
                summary.skipped.push((i, e.to_string()));
                continue;
            }
        };
        match parse_candidates(&raw, 3) {
            Ok(p) => {
                let record = DistillRecord {
                    sentence: item.sentence.clone(),
                    span_start: item.span.start,
                    span_end: item.span.end,
                    span_text: span_text.to_string(),
                    rationale: p.rationale,
                    candidates: p.candidates,
                    teacher_id: teacher.model_id().to_string(),
                    template_id: id.as_str().to_string(),
                };
                let mut line = serde_json::to_string(&record).expect("record serializes");
                line.push('\n');
                file.write_all(line.as_bytes())
                    .and_then(|_| file.flush())
                    .map_err(|e| AbstractError::Io(e.to_string()))?;
                done.insert(item.key());
                summary.written += 1;
            }
            Err(e) => {
                log::warn!("item {i}: unparseable teacher output: {e}");
                summary.skipped.push((i, e.to_string()));
            }
        }
    }
    Ok(summary)
}
