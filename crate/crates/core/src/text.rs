//! Small text helpers shared by the embedder, the scripted backend and the scorer.

/// Lower-cased alphanumeric runs, in order of appearance.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "any", "as", "at", "by", "did", "do", "does", "during", "for", "from",
    "had", "has", "have", "his", "her", "in", "is", "it", "its", "of", "on", "or", "the",
    "their", "to", "was", "were", "what", "when", "which", "who", "whom", "with", "point",
];

const MONTHS: &[&str] = &[
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep",
    "sept", "oct", "nov", "dec",
];

/// Tokens that carry topical meaning: at least two characters, not a stopword,
/// not a month name and not purely numeric.
pub fn content_words(text: &str) -> Vec<String> {
    tokens(text)
        .into_iter()
        .filter(|t| {
            t.chars().count() >= 2
                && !STOPWORDS.contains(&t.as_str())
                && !MONTHS.contains(&t.as_str())
                && !t.chars().all(|c| c.is_ascii_digit())
        })
        .collect()
}

/// Lower-cases and collapses every whitespace run to a single space.
pub fn fold(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}
