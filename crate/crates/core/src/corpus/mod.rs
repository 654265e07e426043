//! Corpus ingestion: BRAT standoff, JSONL, Reddit post filtering, ShareGPT turn
//! filtering and thread-level splits.

mod brat;
mod jsonl;
mod reddit;
mod sharegpt;
mod split;

pub use brat::{parse_brat, serialize_brat, BratError, BratErrorKind};
pub use jsonl::{read_jsonl, read_jsonl_path, write_jsonl, write_jsonl_atomic, JsonlError};
pub use reddit::{
    filter_posts, sample_posts, violations, FilterReport, LanguageIdentifier, LanguageScores,
    PrecomputedLanguageScores, RawPost, StopwordLanguageId, ENGLISH_THRESHOLD, MALFORMED, RULE_LANGUAGE, RULE_NSFW,
    RULE_REMOVED,
};
pub use sharegpt::{is_human_role, keep_turn, sharegpt_filter, Turn, MAX_TURN_TOKENS};
pub use split::{split_by_time, split_dataset, DatasetSplit, SplitError, SplitSizes};

use crate::document::{DocKind, Document};

/// Title and body documents for an exported post. An empty body yields no body document.
pub fn post_documents(post: &RawPost) -> Vec<Document> {
    let mut docs = vec![Document::new(format!("{}-title", post.id), DocKind::Title, post.title.clone(), post.id.clone())];
    if !post.body.trim().is_empty() {
        docs.push(Document::new(format!("{}-body", post.id), DocKind::Body, post.body.clone(), post.id.clone()));
    }
    docs
}
