//! Self-disclosure detection, importance rating, and span-level abstraction for
//! user-authored text, with the evaluation metrics and corpus tooling around them.
//!
//! Offsets are Unicode code points throughout, half-open `[start, end)`.

pub mod abstraction;
pub mod config;
pub mod corpus;
pub mod detect;
pub mod document;
pub mod eval;
pub mod importance;
pub mod llm;
pub mod span;
pub mod taxonomy;
pub mod text;

pub use document::{DocKind, Document, DocumentError, Thread};
pub use span::{
    apply_edit, apply_span_edit, contains_relation, overlap_len, AnnotationSet, DisclosureSpan, Layer, SpanError,
    SpanRange,
};
pub use taxonomy::{Category, CategoryGroup, UnknownCategory};
pub use abstraction::{AbstractionSet, Strategy};
pub use config::AppConfig;
pub use eval::{EvalReport, Prf};
pub use importance::{ImportanceLevel, ImportanceRating};
pub use llm::{CachePolicy, LlmClient};
