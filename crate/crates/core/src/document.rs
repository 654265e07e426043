//! Documents (post titles, bodies, comments) and the threads that group them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    Title,
    Body,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("document `{0}` has empty text")]
    EmptyText(String),
    #[error("document `{0}` is not a comment but has a parent_id")]
    UnexpectedParent(String),
    #[error("document `{doc}` belongs to thread `{found}`, expected `{expected}`")]
    ThreadMismatch {
        doc: String,
        expected: String,
        found: String,
    },
    #[error("thread `{thread}` has more than one {kind:?} document")]
    DuplicateKind { thread: String, kind: DocKind },
}

/// One unit of user-authored text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub kind: DocKind,
    pub text: String,
    #[serde(default)]
    pub parent_id: Option<String>,
    pub thread_id: String,
}

impl Document {
    pub fn new(id: impl Into<String>, kind: DocKind, text: impl Into<String>, thread_id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind,
            text: text.into(),
            parent_id: None,
            thread_id: thread_id.into(),
        }
    }

    pub fn title(id: impl Into<String>, thread_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self::new(id, DocKind::Title, text, thread_id)
    }

    pub fn body(id: impl Into<String>, thread_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self::new(id, DocKind::Body, text, thread_id)
    }

    pub fn comment(
        id: impl Into<String>,
        thread_id: impl Into<String>,
        text: impl Into<String>,
        parent_id: Option<String>,
    ) -> Self {
        let mut doc = Self::new(id, DocKind::Comment, text, thread_id);
        doc.parent_id = parent_id;
        doc
    }

    pub fn validate(&self) -> Result<(), DocumentError> {
        if self.parent_id.is_some() && self.kind != DocKind::Comment {
            return Err(DocumentError::UnexpectedParent(self.id.clone()));
        }
        Ok(())
    }

    /// Detection requires non-empty text.
    pub fn validate_for_detection(&self) -> Result<(), DocumentError> {
        self.validate()?;
        if self.text.trim().is_empty() {
            return Err(DocumentError::EmptyText(self.id.clone()));
        }
        Ok(())
    }
}

/// A post (title and optional body) with its comments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thread {
    pub thread_id: String,
    pub documents: Vec<Document>,
}

impl Thread {
    pub fn new(thread_id: impl Into<String>, documents: Vec<Document>) -> Result<Self, DocumentError> {
        let thread = Self {
            thread_id: thread_id.into(),
            documents,
        };
        thread.validate()?;
        Ok(thread)
    }

    pub fn validate(&self) -> Result<(), DocumentError> {
        let mut seen_title = false;
        let mut seen_body = false;
        for doc in &self.documents {
            doc.validate()?;
            if doc.thread_id != self.thread_id {
                return Err(DocumentError::ThreadMismatch {
                    doc: doc.id.clone(),
                    expected: self.thread_id.clone(),
                    found: doc.thread_id.clone(),
                });
            }
            let seen = match doc.kind {
                DocKind::Title => &mut seen_title,
                DocKind::Body => &mut seen_body,
                DocKind::Comment => continue,
            };
            if *seen {
                return Err(DocumentError::DuplicateKind {
                    thread: self.thread_id.clone(),
                    kind: doc.kind,
                });
            }
            *seen = true;
        }
        Ok(())
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == doc_id)
    }

    pub fn title(&self) -> Option<&Document> {
        self.documents.iter().find(|d| d.kind == DocKind::Title)
    }

    pub fn body(&self) -> Option<&Document> {
        self.documents.iter().find(|d| d.kind == DocKind::Body)
    }

    pub fn parent_of(&self, doc: &Document) -> Option<&Document> {
        let pid = doc.parent_id.as_deref()?;
        self.get(pid).filter(|p| p.kind == DocKind::Comment)
    }

    /// Groups documents by `thread_id`, preserving first-seen thread order.
    pub fn group(documents: impl IntoIterator<Item = Document>) -> Result<Vec<Thread>, DocumentError> {
        let mut order: Vec<String> = Vec::new();
        let mut by_id: std::collections::HashMap<String, Vec<Document>> = Default::default();
        for doc in documents {
            if !by_id.contains_key(&doc.thread_id) {
                order.push(doc.thread_id.clone());
            }
            by_id.entry(doc.thread_id.clone()).or_default().push(doc);
        }
        order
            .into_iter()
            .map(|id| {
                let docs = by_id.remove(&id).unwrap_or_default();
                Thread::new(id, docs)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parent_only_on_comments() {
        let mut d = Document::body("b", "t", "hello");
        d.parent_id = Some("x".into());
        assert!(matches!(d.validate(), Err(DocumentError::UnexpectedParent(_))));
        assert!(Document::comment("c", "t", "hi", Some("x".into())).validate().is_ok());
    }

    #[test]
    fn empty_text_rejected_for_detection() {
        assert!(Document::body("b", "t", "  ").validate_for_detection().is_err());
    }

    #[test]
    fn groups_by_thread() {
        let docs = vec![
            Document::title("t1-title", "t1", "A"),
            Document::title("t2-title", "t2", "B"),
            Document::comment("c1", "t1", "C", None),
        ];
        let threads = Thread::group(docs).unwrap();
        assert_eq!(threads.len(), 2);
        assert_eq!(threads[0].documents.len(), 2);
        assert_eq!(threads[1].thread_id, "t2");
    }

    #[test]
    fn record_schema() {
        let d = Document::comment("c1", "t1", "hi", Some("c0".into()));
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"id": "c1", "kind": "comment", "text": "hi", "parent_id": "c0", "thread_id": "t1"})
        );
    }
}
