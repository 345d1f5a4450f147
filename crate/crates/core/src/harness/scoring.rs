use std::collections::BTreeSet;

use super::dataset::{Category, QAItem};

/// Case-folds, trims non-alphanumeric characters from both ends and
/// collapses inner whitespace.
pub fn normalize_answer(text: &str) -> String {
    text.trim_matches(|c: char| !c.is_alphanumeric())
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn answer_set<'a>(parts: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
    parts
        .into_iter()
        .flat_map(|p| p.split(','))
        .map(normalize_answer)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Exact match after normalization.
///
/// * historical, c1, c3: equals any gold string.
/// * c2: the comma-separated prediction equals the gold set, order-free.
/// * commonsense: equals the gold option label or its full text.
pub fn exact_match(prediction: &str, item: &QAItem) -> bool {
    let pred = normalize_answer(prediction);
    if pred.is_empty() {
        return false;
    }
    match item.category {
        Category::C2 => {
            let gold = answer_set(item.gold.iter().map(String::as_str));
            !gold.is_empty() && answer_set([prediction]) == gold
        }
        Category::Commonsense => {
            let label = item.gold.first().map(|g| normalize_answer(g));
            let text = item.gold_option().map(|o| normalize_answer(&o.text));
            Some(&pred) == label.as_ref() || Some(&pred) == text.as_ref()
        }
        _ => item.gold.iter().any(|g| normalize_answer(g) == pred),
    }
}
