use std::collections::HashSet;
use std::sync::OnceLock;

const ENGLISH: &str = include_str!("stopwords_en.txt");

/// sha256 of the shipped English list; keyword output depends on it.
pub const ENGLISH_STOPWORDS_SHA256: &str = "4e22be0ad71ae1c41dd7a8f944e851ead671d114edf4faad1ee8c698d2ba5084";

pub fn english_stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| ENGLISH.lines().map(str::trim).filter(|w| !w.is_empty()).collect())
}

/// Stopword list selectable by id.
pub fn stopwords(id: &str) -> Option<&'static HashSet<&'static str>> {
    static EMPTY: OnceLock<HashSet<&'static str>> = OnceLock::new();
    match id {
        "english" => Some(english_stopwords()),
        "none" => Some(EMPTY.get_or_init(HashSet::new)),
        _ => None,
    }
}

/// Splits on non-alphanumerics, optionally lowercases, and drops stopwords
/// and single-character tokens.
pub fn tokenize(text: &str, lowercase: bool, stop: &HashSet<&str>) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(|t| if lowercase { t.to_lowercase() } else { t.to_string() })
        .filter(|t| !stop.contains(t.as_str()))
        .collect()
}
