//! Span-level abstraction: prompt assets, the three generation strategies,
//! output parsing, candidate validation and distillation data.

mod distill;
mod generate;
mod parse;
mod template;
mod validate;

use thiserror::Error;

pub use distill::{build_distillation_corpus, distillation_items, DistillItem, DistillRecord, DistillSummary};
pub use generate::{
    containing_sentence, format_examples, generate_abstractions, generate_for_sentence, AbstractionSet,
    GenerateOptions, Generated, RejectedCandidate, Strategy,
};
pub use parse::{parse_candidates, parse_single_candidate, ParseError, ParsedCandidates};
pub(crate) use parse::{clean_rationale, json_objects};
pub use template::{bindings, build_prompt, render, TemplateError, TemplateId};
pub use validate::{flag_duplicates, validate_abstraction, ValidationReport, LENGTH_FLAG_RATIO};

use crate::llm::LlmError;
use crate::span::SpanError;

#[derive(Debug, Error)]
pub enum AbstractError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Span(#[from] SpanError),
    #[error(transparent)]
    Llm(LlmError),
    #[error("span {start}..{end} crosses a sentence boundary")]
    CrossesSentence { start: usize, end: usize },
    #[error("only {} valid candidates after regeneration", valid.len())]
    PartialResult {
        valid: Vec<String>,
        rejected: Vec<RejectedCandidate>,
        provider_calls: usize,
    },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("i/o error: {0}")]
    Io(String),
}
