use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::abstraction::parse::{parse_candidates, parse_single_candidate, ParsedCandidates};
use crate::abstraction::template::{bindings, build_prompt, TemplateId};
use crate::abstraction::validate::{flag_duplicates, validate_abstraction, ValidationReport};
use crate::abstraction::AbstractError;
use crate::detect::SentenceSplitter;
use crate::document::Document;
use crate::llm::{CachePolicy, LlmClient, LlmError};
use crate::span::{DisclosureSpan, SpanRange};
use crate::text::char_slice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Sampling,
    #[default]
    EndToEnd,
    Iterative,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Sampling => "sampling",
            Strategy::EndToEnd => "end_to_end",
            Strategy::Iterative => "iterative",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "sampling" => Ok(Strategy::Sampling),
            "end_to_end" | "e2e" => Ok(Strategy::EndToEnd),
            "iterative" => Ok(Strategy::Iterative),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateOptions {
    pub n: usize,
    pub with_thought: bool,
    pub sampling_temperature: f64,
    pub structured_temperature: f64,
    pub cache_policy: CachePolicy,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            n: 3,
            with_thought: false,
            sampling_temperature: 0.7,
            structured_temperature: 0.3,
            cache_policy: CachePolicy::Default,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedCandidate {
    pub candidate: String,
    pub report: ValidationReport,
}

/// Candidates for one span, all within the sentence that contains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractionSet {
    pub span: DisclosureSpan,
    pub sentence: String,
    /// Code-point offset of `sentence` in the document.
    pub sentence_start: usize,
    pub candidates: Vec<String>,
    pub rationale: Option<String>,
    pub strategy: Strategy,
    pub per_candidate_validation: Vec<ValidationReport>,
    pub provider_calls: usize,
}

/// Output of generation over a sentence-relative span.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub candidates: Vec<String>,
    pub rationale: Option<String>,
    pub reports: Vec<ValidationReport>,
    pub provider_calls: usize,
}

/// Renders the iterative `{examples}` binding.
pub fn format_examples(prior: &[String]) -> String {
    if prior.is_empty() {
        "None".to_string()
    } else {
        prior.iter().map(|c| format!("\"{c}\"")).collect::<Vec<_>>().join(", ")
    }
}

struct Run<'a> {
    client: &'a LlmClient,
    sentence: &'a str,
    span: SpanRange,
    span_text: &'a str,
    calls: usize,
}

impl Run<'_> {
    fn call(&mut self, id: TemplateId, examples: Option<&[String]>, temperature: f64, policy: CachePolicy) -> Result<String, AbstractError> {
        let mut b = bindings([("sentence", self.sentence), ("span", self.span_text)]);
        if let Some(ex) = examples {
            b.insert("examples".into(), format_examples(ex));
        }
        let prompt = build_prompt(id, &b)?;
        self.calls += 1;
        Ok(self.client.complete(&self.client.request(id.as_str(), prompt, temperature), policy)?)
    }

    fn validate(&self, c: &str) -> Result<ValidationReport, AbstractError> {
        Ok(validate_abstraction(self.sentence, self.span, c)?)
    }

    /// One completion that must yield one accepted candidate, with one regeneration.
    fn single(
        &mut self,
        id: TemplateId,
        examples: Option<&[String]>,
        temperature: f64,
        policy: CachePolicy,
        rejected: &mut Vec<RejectedCandidate>,
    ) -> Result<Option<ParsedCandidates>, AbstractError> {
        for attempt in 0..2 {
            let policy = if attempt == 0 { policy } else { CachePolicy::Refresh };
            let raw = self.call(id, examples, temperature, policy)?;
            match parse_single_candidate(&raw) {
                Ok(p) => {
                    let report = self.validate(&p.candidates[0])?;
                    if report.accepted() {
                        return Ok(Some(p));
                    }
                    rejected.push(RejectedCandidate {
                        candidate: p.candidates[0].clone(),
                        report,
                    });
                }
                Err(e) => {
                    log::warn!("unparseable candidate from {id}: {e}");
                    rejected.push(RejectedCandidate {
                        candidate: raw.trim().to_string(),
                        report: self.validate("")?,
                    });
                }
            }
        }
        Ok(None)
    }
}

/// Generates `opts.n` abstractions for `span` (offsets into `sentence`).
pub fn generate_for_sentence(
    sentence: &str,
    span: SpanRange,
    strategy: Strategy,
    opts: &GenerateOptions,
    client: &LlmClient,
) -> Result<Generated, AbstractError> {
    if opts.n == 0 {
        return Err(AbstractError::InvalidOptions("n must be positive".into()));
    }
    if strategy == Strategy::EndToEnd && opts.n != 3 {
        return Err(AbstractError::InvalidOptions(
            "the end-to-end template asks for exactly three candidates".into(),
        ));
    }
    let span_text = char_slice(sentence, span.start, span.end).ok_or(crate::span::SpanError::OutOfBounds {
        start: span.start,
        end: span.end,
        len: crate::text::char_len(sentence),
    })?;
    let mut run = Run {
        client,
        sentence,
        span,
        span_text,
        calls: 0,
    };
    let mut accepted: Vec<String> = Vec::new();
    let mut rationale: Option<String> = None;
    let mut rejected: Vec<RejectedCandidate> = Vec::new();

    match strategy {
        Strategy::Sampling | Strategy::Iterative => {
            let (id, temperature) = match (strategy, opts.with_thought) {
                (Strategy::Sampling, false) => (TemplateId::OneSpan, opts.sampling_temperature),
                (Strategy::Sampling, true) => (TemplateId::OneSpanThought, opts.sampling_temperature),
                (_, false) => (TemplateId::Iterative, opts.structured_temperature),
                (_, true) => (TemplateId::IterativeThought, opts.structured_temperature),
            };
            for _ in 0..opts.n {
                let examples = (strategy == Strategy::Iterative).then_some(accepted.as_slice());
                let examples = examples.map(|e| e.to_vec());
                if let Some(p) = run.single(id, examples.as_deref(), temperature, opts.cache_policy, &mut rejected)? {
                    rationale = rationale.or(p.rationale);
                    accepted.extend(p.candidates);
                }
            }
        }
        Strategy::EndToEnd => {
            let id = if opts.with_thought {
                TemplateId::ThreeSpanE2eThought
            } else {
                TemplateId::ThreeSpanE2e
            };
            for attempt in 0..2 {
                let policy = if attempt == 0 { opts.cache_policy } else { CachePolicy::Refresh };
                let raw = run.call(id, None, opts.structured_temperature, policy)?;
                match parse_candidates(&raw, opts.n) {
                    Ok(p) => {
                        rationale = rationale.or(p.rationale);
                        for c in p.candidates {
                            if accepted.len() == opts.n {
                                break;
                            }
                            let report = run.validate(&c)?;
                            if report.accepted() {
                                accepted.push(c);
                            } else {
                                rejected.push(RejectedCandidate { candidate: c, report });
                            }
                        }
                    }
                    Err(e) => log::warn!("unparseable candidates from {id}: {e}"),
                }
                if accepted.len() == opts.n {
                    break;
                }
            }
        }
    }

    if accepted.len() < opts.n {
        return Err(AbstractError::PartialResult {
            valid: accepted,
            rejected,
            provider_calls: run.calls,
        });
    }
    let mut reports = accepted.iter().map(|c| run.validate(c)).collect::<Result<Vec<_>, _>>()?;
    flag_duplicates(&accepted, &mut reports);
    Ok(Generated {
        candidates: accepted,
        rationale,
        reports,
        provider_calls: run.calls,
    })
}

/// Finds the sentence of `doc` containing `span`.
pub fn containing_sentence(
    doc: &Document,
    span: &DisclosureSpan,
    splitter: &dyn SentenceSplitter,
) -> Result<SpanRange, AbstractError> {
    span.validate_against(doc)?;
    let sentences = splitter.split(&doc.text);
    sentences
        .iter()
        .copied()
        .find(|s| s.start <= span.start && span.end <= s.end)
        .ok_or_else(|| AbstractError::CrossesSentence {
            start: span.start,
            end: span.end,
        })
}

/// Generates abstractions for a span of `doc`, prompting with its sentence.
pub fn generate_abstractions(
    doc: &Document,
    span: &DisclosureSpan,
    strategy: Strategy,
    opts: &GenerateOptions,
    splitter: &dyn SentenceSplitter,
    client: &LlmClient,
) -> Result<AbstractionSet, AbstractError> {
    let sentence_range = containing_sentence(doc, span, splitter)?;
    let sentence = char_slice(&doc.text, sentence_range.start, sentence_range.end)
        .expect("splitter ranges lie in the text")
        .to_string();
    let local = SpanRange::new(span.start - sentence_range.start, span.end - sentence_range.start)
        .expect("span is non-empty");
    let g = generate_for_sentence(&sentence, local, strategy, opts, client)?;
    Ok(AbstractionSet {
        span: span.clone(),
        sentence,
        sentence_start: sentence_range.start,
        candidates: g.candidates,
        rationale: g.rationale,
        strategy,
        per_candidate_validation: g.reports,
        provider_calls: g.provider_calls,
    })
}

impl From<LlmError> for AbstractError {
    fn from(e: LlmError) -> Self {
        AbstractError::Llm(e)
    }
}
