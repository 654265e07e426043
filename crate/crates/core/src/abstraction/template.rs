use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("missing binding for placeholder `{0}`")]
    MissingBinding(String),
    #[error("malformed template at byte {0}")]
    Malformed(usize),
    #[error("unknown template `{0}`")]
    Unknown(String),
}

macro_rules! templates {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum TemplateId {
            $($variant),*
        }

        impl TemplateId {
            pub const ALL: &'static [TemplateId] = &[$(TemplateId::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(TemplateId::$variant => $name),*
                }
            }

            /// The stored template text, exactly as shipped.
            pub fn text(self) -> &'static str {
                match self {
                    $(TemplateId::$variant => include_str!(concat!("../../assets/prompts/", $name, ".txt"))),*
                }
            }
        }
    };
}

templates! {
    OneSpan => "one_span",
    OneSpanThought => "one_span_thought",
    ThreeSpanE2e => "three_span_e2e",
    ThreeSpanE2eThought => "three_span_e2e_thought",
    Iterative => "iterative",
    IterativeThought => "iterative_thought",
    DistillTeacher => "distill_teacher",
    ImportanceRate => "importance_rate",
    ImportanceRateThought => "importance_rate_thought",
    ImportanceThoughtGen => "importance_thought_gen",
    Detection => "detection",
    SentenceParaphrase => "sentence_paraphrase",
    SentenceAbstraction => "sentence_abstraction",
    SentenceAbstractionWithSpans => "sentence_abstraction_with_spans",
    SpanAbstractionZeroShot => "span_abstraction_zero_shot",
}

impl TemplateId {
    /// Templates without a pipeline operation, kept for reference experiments.
    pub fn is_optional(self) -> bool {
        matches!(
            self,
            TemplateId::Detection
                | TemplateId::SentenceParaphrase
                | TemplateId::SentenceAbstraction
                | TemplateId::SentenceAbstractionWithSpans
                | TemplateId::SpanAbstractionZeroShot
        )
    }

    /// First 12 hex digits of the SHA-256 of the template text.
    pub fn version(self) -> String {
        hex::encode(Sha256::digest(self.text().as_bytes()))[..12].to_string()
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let _ = walk(self.text(), |piece| {
            if let Piece::Field(name) = piece {
                if !out.iter().any(|n| n == name) {
                    out.push(name.to_string());
                }
            }
            Ok(())
        });
        out
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| TemplateError::Unknown(s.to_string()))
    }
}

enum Piece<'a> {
    Literal(&'a str),
    Field(&'a str),
}

/// Walks a format string with `{name}` fields and `{{`/`}}` escapes.
fn walk<'a>(template: &'a str, mut f: impl FnMut(Piece<'a>) -> Result<(), TemplateError>) -> Result<(), TemplateError> {
    let bytes = template.as_bytes();
    let mut i = 0;
    let mut lit = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if bytes.get(i + 1) == Some(&b'{') => {
                f(Piece::Literal(&template[lit..=i]))?;
                i += 2;
                lit = i;
            }
            b'}' if bytes.get(i + 1) == Some(&b'}') => {
                f(Piece::Literal(&template[lit..=i]))?;
                i += 2;
                lit = i;
            }
            b'{' => {
                let close = template[i + 1..].find('}').ok_or(TemplateError::Malformed(i))? + i + 1;
                let name = &template[i + 1..close];
                if name.is_empty() || name.contains('{') {
                    return Err(TemplateError::Malformed(i));
                }
                f(Piece::Literal(&template[lit..i]))?;
                f(Piece::Field(name))?;
                i = close + 1;
                lit = i;
            }
            b'}' => return Err(TemplateError::Malformed(i)),
            _ => i += 1,
        }
    }
    f(Piece::Literal(&template[lit..]))
}

/// Renders a format string. Extra bindings are ignored.
pub fn render(template: &str, bindings: &BTreeMap<String, String>) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    walk(template, |piece| {
        match piece {
            Piece::Literal(s) => out.push_str(s),
            Piece::Field(name) => out.push_str(
                bindings
                    .get(name)
                    .ok_or_else(|| TemplateError::MissingBinding(name.to_string()))?,
            ),
        }
        Ok(())
    })?;
    Ok(out)
}

/// Renders a stored template.
pub fn build_prompt(id: TemplateId, bindings: &BTreeMap<String, String>) -> Result<String, TemplateError> {
    render(id.text(), bindings)
}

/// Builds a binding map from `(name, value)` pairs.
pub fn bindings<K: Into<String>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_and_fields() {
        let b = bindings([("a", "x{y}")]);
        assert_eq!(render("{{\"k\": {a}}}", &b).unwrap(), "{\"k\": x{y}}");
        assert_eq!(render("plain", &b).unwrap(), "plain");
    }

    #[test]
    fn missing_binding_names_placeholder() {
        let err = build_prompt(TemplateId::OneSpan, &bindings([("sentence", "s")])).unwrap_err();
        assert_eq!(err, TemplateError::MissingBinding("span".into()));
    }

    #[test]
    fn malformed() {
        let b = BTreeMap::new();
        assert!(matches!(render("a } b", &b), Err(TemplateError::Malformed(2))));
        assert!(matches!(render("a { b", &b), Err(TemplateError::Malformed(2))));
    }

    #[test]
    fn every_asset_parses() {
        for id in TemplateId::ALL {
            let names = id.placeholders();
            assert!(!names.is_empty(), "{id}");
            let b = bindings(names.iter().map(|n| (n.clone(), String::new())));
            let out = build_prompt(*id, &b).unwrap();
            assert!(!out.contains("{sentence}") && !out.contains("{span}"));
            assert_eq!(id.as_str().parse::<TemplateId>().unwrap(), *id);
        }
    }

    #[test]
    fn placeholder_sets() {
        assert_eq!(TemplateId::Iterative.placeholders(), ["sentence", "span", "examples"]);
        assert_eq!(
            TemplateId::ImportanceRate.placeholders(),
            ["title", "post", "comment", "disclosure", "post_empty_explaination"]
        );
        assert_eq!(TemplateId::ImportanceThoughtGen.placeholders().len(), 6);
    }
}
