//! Text normalization shared by every layer that compares user text with
//! model surface forms.
//!
//! The pipeline is: Unicode NFC, lowercase, collapse whitespace, then strip
//! non-alphanumeric characters from both ends of every token. Internal
//! punctuation (`company's`, `job-posting`) is kept.

use unicode_normalization::UnicodeNormalization;

/// Splits `text` into normalized tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let folded: String = text.nfc().collect::<String>().to_lowercase().nfc().collect();
    folded
        .split_whitespace()
        .map(|tok| tok.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|tok| !tok.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Normalized form of `text`: its tokens joined by single spaces.
pub fn normalize(text: &str) -> String {
    tokenize(text).join(" ")
}

/// Light suffix stripping used only for classifier features when enabled.
pub fn stem(token: &str) -> String {
    let n = token.chars().count();
    if n > 4 && token.ends_with("ies") {
        format!("{}y", &token[..token.len() - 3])
    } else if n > 4 && token.ends_with("ing") {
        token[..token.len() - 3].to_owned()
    } else if n > 3 && token.ends_with('s') && !token.ends_with("ss") {
        token[..token.len() - 1].to_owned()
    } else {
        token.to_owned()
    }
}

/// Words that carry no topic signal. Used when scoring topic suggestions.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "an", "and", "are", "be", "can", "do", "does", "for", "how", "i", "in", "is",
    "it", "me", "my", "of", "on", "or", "the", "this", "to", "what", "when", "where", "which",
    "who", "why", "with", "you", "your",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}
