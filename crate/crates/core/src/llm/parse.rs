//! Parsers for model output. Each returns a complete value or an error
//! message; nothing partial escapes.

use std::collections::HashSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::store::{parse_date, Quadruple, TimeWindow};

/// Result of query analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryAnalysis {
    pub entities: Vec<String>,
    /// The question with temporal expressions removed.
    pub time_agnostic_query: String,
    pub window: TimeWindow,
    /// True when neither start nor end came from the model.
    pub window_defaulted: bool,
}

/// Returns the body of the first fenced block, or the whole text.
fn fenced_body(text: &str) -> &str {
    let Some(open) = text.find("```") else {
        return text;
    };
    let after = &text[open + 3..];
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
    let body = &after[body_start..];
    match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    }
}

fn optional_date(value: &str) -> Result<Option<NaiveDate>, String> {
    let v = value.trim();
    if v.is_empty() || ["none", "null", "n/a", "-", "unknown"].contains(&v.to_lowercase().as_str())
    {
        return Ok(None);
    }
    parse_date(v)
        .map(Some)
        .map_err(|_| format!("invalid date {v:?}"))
}

/// Parses an `analysis` block. Absent dates fall back to `default_window`
/// bound by bound. Blank entities are dropped; an empty entity list falls
/// back to the rewritten query.
pub fn parse_analysis(
    text: &str,
    q_raw: &str,
    default_window: &TimeWindow,
) -> Result<QueryAnalysis, String> {
    let body = fenced_body(text);
    let mut entities = None;
    let mut query = None;
    let mut start = None;
    let mut end = None;
    for line in body.lines() {
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        match key.trim().to_lowercase().as_str() {
            "entities" => {
                entities = Some(
                    value
                        .split('|')
                        .map(str::trim)
                        .filter(|e| !e.is_empty())
                        .map(str::to_string)
                        .collect::<Vec<_>>(),
                )
            }
            "query" => query = Some(value.trim().to_string()),
            "start" => start = optional_date(value)?,
            "end" => end = optional_date(value)?,
            _ => {}
        }
    }
    if entities.is_none() && query.is_none() {
        return Err("no `entities:` or `query:` line found".into());
    }
    let window_defaulted = start.is_none() && end.is_none();
    let start = start.unwrap_or(default_window.start);
    let end = end.unwrap_or(default_window.end);
    if start > end {
        return Err(format!("window start {start} is after end {end}"));
    }
    let time_agnostic_query = query
        .filter(|q| !q.is_empty())
        .unwrap_or_else(|| q_raw.trim().to_string());
    let mut entities = entities.unwrap_or_default();
    let mut seen = HashSet::new();
    entities.retain(|e| seen.insert(crate::store::normalize_entity(e)));
    if entities.is_empty() {
        entities.push(time_agnostic_query.clone());
    }
    Ok(QueryAnalysis {
        entities,
        time_agnostic_query,
        window: TimeWindow { start, end },
        window_defaulted,
    })
}

/// Quadruples and an optional follow-up query pulled from a response.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadLines {
    pub quads: Vec<Quadruple>,
    pub follow_up: Option<String>,
    /// Lines that looked like quadruples but failed validation.
    pub dropped: Vec<String>,
}

/// Reads `subject | relation | object | YYYY-MM-DD` lines (inside or
/// outside fences) and the first `FOLLOW-UP:` line. Duplicate quadruples
/// are collapsed; prose is ignored.
pub fn parse_quad_lines(text: &str) -> QuadLines {
    let mut out = QuadLines::default();
    let mut seen = HashSet::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.starts_with("```") || line.is_empty() {
            continue;
        }
        let upper = line.to_uppercase();
        if let Some(rest) = upper
            .strip_prefix("FOLLOW-UP:")
            .or_else(|| upper.strip_prefix("FOLLOW UP:"))
        {
            let offset = line.len() - rest.len();
            let q = line[offset..].trim();
            if out.follow_up.is_none() && !q.is_empty() {
                out.follow_up = Some(q.to_string());
            }
            continue;
        }
        if !line.contains('|') {
            continue;
        }
        let line = line.trim_start_matches(['-', '*', ' ']);
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        let parsed = if fields.len() == 4 {
            Quadruple::parse(fields[0], fields[1], fields[2], fields[3]).ok()
        } else {
            None
        };
        match parsed {
            Some(q) => {
                if seen.insert(q.key()) {
                    out.quads.push(q);
                }
            }
            None => {
                log::warn!("dropping malformed quadruple line {line:?}");
                out.dropped.push(line.to_string());
            }
        }
    }
    out
}

pub const ANSWER_MARKER: &str = "ANSWER:";

/// Text after the last `ANSWER:` marker, or `None` if absent or empty.
pub fn extract_answer(text: &str) -> Option<String> {
    text.lines()
        .rev()
        .find_map(|l| l.split_once(ANSWER_MARKER).map(|(_, a)| a.trim().to_string()))
        .filter(|a| !a.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> TimeWindow {
        TimeWindow::parse("2024-01-01", "2025-10-31").unwrap()
    }

    #[test]
    fn analysis_block() {
        let text = "Sure.\n```analysis\nentities: World’s Richest Person | Elon Musk\nquery: Who was the richest?\nstart: 2025-08-20\nend: 2025-08-20\n```\n";
        let a = parse_analysis(text, "raw", &window()).unwrap();
        assert_eq!(a.entities, vec!["World’s Richest Person", "Elon Musk"]);
        assert_eq!(a.window, TimeWindow::parse("2025-08-20", "2025-08-20").unwrap());
        assert!(!a.window_defaulted);
    }

    #[test]
    fn analysis_defaults() {
        let a = parse_analysis("entities: X\nquery: q", "raw", &window()).unwrap();
        assert_eq!(a.window, window());
        assert!(a.window_defaulted);
        let a = parse_analysis("entities:\nquery: what is it", "raw", &window()).unwrap();
        assert_eq!(a.entities, vec!["what is it"]);
        let a = parse_analysis("entities: X\nstart: 2025-01-01", "raw q", &window()).unwrap();
        assert_eq!(a.window, TimeWindow::parse("2025-01-01", "2025-10-31").unwrap());
        assert_eq!(a.time_agnostic_query, "raw q");
    }

    #[test]
    fn analysis_errors() {
        assert!(parse_analysis("I cannot help.", "q", &window()).is_err());
        assert!(parse_analysis("entities: X\nstart: 2025-13-01", "q", &window()).is_err());
        assert!(parse_analysis("entities: X\nstart: 2025-02-01\nend: 2025-01-01", "q", &window()).is_err());
    }

    #[test]
    fn quad_lines() {
        let text = "```quads\nA | held by | B | 2014-03-01\nA | held by | B | 2014-03-01\nbad | line | 2014-99-01\nC | r | D | not-a-date\n```\nFOLLOW-UP: Oracle stock price September 2025\nFOLLOW-UP: second";
        let p = parse_quad_lines(text);
        assert_eq!(p.quads.len(), 1);
        assert_eq!(p.dropped.len(), 2);
        assert_eq!(p.follow_up.as_deref(), Some("Oracle stock price September 2025"));
        assert_eq!(parse_quad_lines("Nothing relevant comes to mind."), QuadLines::default());
    }

    #[test]
    fn answers() {
        assert_eq!(extract_answer("thinking\nANSWER: Elon Musk").as_deref(), Some("Elon Musk"));
        assert_eq!(extract_answer("ANSWER: a\nANSWER: b").as_deref(), Some("b"));
        assert_eq!(extract_answer("no marker"), None);
        assert_eq!(extract_answer("ANSWER:   "), None);
    }
}
