use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

pub const MAX_TURN_TOKENS: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub conversation_id: String,
    pub role: String,
    pub text: String,
}

static FIRST_PERSON_I: Lazy<Regex> = Lazy::new(|| Regex::new(r"\bI\b").unwrap());
static FIRST_PERSON_MY: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)\bmy\b").unwrap());

pub fn is_human_role(role: &str) -> bool {
    matches!(role.trim().to_ascii_lowercase().as_str(), "human" | "user")
}

/// Human turn of at most 500 whitespace tokens containing the word "I"
/// (case-sensitive) or "my" (any case).
pub fn keep_turn(turn: &Turn) -> bool {
    is_human_role(&turn.role)
        && turn.text.split_whitespace().count() <= MAX_TURN_TOKENS
        && (FIRST_PERSON_I.is_match(&turn.text) || FIRST_PERSON_MY.is_match(&turn.text))
}

pub fn sharegpt_filter(turns: impl IntoIterator<Item = Turn>) -> Vec<Turn> {
    turns.into_iter().filter(keep_turn).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn turn(role: &str, text: &str) -> Turn {
        Turn {
            conversation_id: "c".into(),
            role: role.into(),
            text: text.into(),
        }
    }

    #[test]
    fn conditions() {
        assert!(keep_turn(&turn("human", "I need help with my resume")));
        assert!(!keep_turn(&turn("gpt", "I need help with my resume")));
        assert!(!keep_turn(&turn("assistant", "I can help")));
        assert!(keep_turn(&turn("user", "Fix MY code")));
        assert!(!keep_turn(&turn("human", "i need help")));
        assert!(!keep_turn(&turn("human", "Summarize this mystery novel")));
        assert!(keep_turn(&turn("human", "I'm stuck")));
    }

    #[test]
    fn token_limit() {
        let at_limit = format!("my {}", "word ".repeat(499));
        assert!(keep_turn(&turn("human", &at_limit)));
        let over = format!("my {}", "word ".repeat(500));
        assert!(!keep_turn(&turn("human", &over)));
    }
}
