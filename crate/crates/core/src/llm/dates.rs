//! Recognizes the temporal expressions used by the scripted backend.
//!
//! Supported forms, tried in this order:
//!
//! | expression                         | window                   |
//! |------------------------------------|--------------------------|
//! | `on August 20, 2025` / `on Jan 1, 2024` | that day            |
//! | `on 2025-08-20`                    | that day                 |
//! | `in March 2014` / `during May 2024`| that calendar month      |
//! | `during 2024` / `in 2024`          | that calendar year       |
//! | `today`, `yesterday`, `this/last month`, `this/last year` | relative to a reference date |

use std::sync::OnceLock;

use chrono::{Datelike, Duration, NaiveDate};
use regex::Regex;

use crate::store::TimeWindow;

const MONTH_ALT: &str = "january|february|march|april|may|june|july|august|september|october|november|december|sept|jan|feb|mar|apr|jun|jul|aug|sep|oct|nov|dec";

pub const MONTH_NAMES: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];

pub fn month_number(name: &str) -> Option<u32> {
    let n = name.to_lowercase();
    let n = n.trim_end_matches('.');
    let idx = match n {
        "sept" => 8,
        _ => MONTH_NAMES
            .iter()
            .position(|m| {
                let m = m.to_lowercase();
                m == n || (n.len() == 3 && m.starts_with(n))
            })?,
    };
    Some(idx as u32 + 1)
}

fn month_window(year: i32, month: u32) -> Option<TimeWindow> {
    let start = NaiveDate::from_ymd_opt(year, month, 1)?;
    let next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)?
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)?
    };
    Some(TimeWindow {
        start,
        end: next - Duration::days(1),
    })
}

fn year_window(year: i32) -> Option<TimeWindow> {
    Some(TimeWindow {
        start: NaiveDate::from_ymd_opt(year, 1, 1)?,
        end: NaiveDate::from_ymd_opt(year, 12, 31)?,
    })
}

struct Patterns {
    day_named: Regex,
    day_iso: Regex,
    month: Regex,
    year: Regex,
    relative: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        day_named: Regex::new(&format!(
            r"(?i)(?:\b(?:on|as of|by)\s+)?\b({MONTH_ALT})\.?\s+(\d{{1,2}}),?\s+(\d{{4}})\b"
        ))
        .unwrap(),
        day_iso: Regex::new(r"(?i)(?:\b(?:on|as of|by)\s+)?\b(\d{4})-(\d{2})-(\d{2})\b").unwrap(),
        month: Regex::new(&format!(r"(?i)\b(?:in|during)\s+({MONTH_ALT})\.?\s+(\d{{4}})\b"))
            .unwrap(),
        year: Regex::new(r"(?i)\b(?:in|during)\s+(\d{4})\b").unwrap(),
        relative: Regex::new(r"(?i)\b(today|yesterday|this month|last month|this year|last year)\b")
            .unwrap(),
    })
}

/// A recognized expression: the window it denotes and its byte span.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalMatch {
    pub window: TimeWindow,
    pub span: (usize, usize),
}

pub fn extract_temporal(text: &str, reference: NaiveDate) -> Option<TemporalMatch> {
    let p = patterns();
    let hit = |m: regex::Match<'_>, window| TemporalMatch {
        window,
        span: (m.start(), m.end()),
    };
    if let Some(c) = p.day_named.captures(text) {
        let month = month_number(&c[1])?;
        let day = NaiveDate::from_ymd_opt(c[3].parse().ok()?, month, c[2].parse().ok()?)?;
        return Some(hit(c.get(0)?, TimeWindow::point(day)));
    }
    if let Some(c) = p.day_iso.captures(text) {
        let day = NaiveDate::from_ymd_opt(c[1].parse().ok()?, c[2].parse().ok()?, c[3].parse().ok()?)?;
        return Some(hit(c.get(0)?, TimeWindow::point(day)));
    }
    if let Some(c) = p.month.captures(text) {
        let w = month_window(c[2].parse().ok()?, month_number(&c[1])?)?;
        return Some(hit(c.get(0)?, w));
    }
    if let Some(c) = p.year.captures(text) {
        let w = year_window(c[1].parse().ok()?)?;
        return Some(hit(c.get(0)?, w));
    }
    if let Some(c) = p.relative.captures(text) {
        let w = match c[1].to_lowercase().as_str() {
            "today" => TimeWindow::point(reference),
            "yesterday" => TimeWindow::point(reference - Duration::days(1)),
            "this month" => month_window(reference.year(), reference.month())?,
            "last month" => {
                let (y, m) = if reference.month() == 1 {
                    (reference.year() - 1, 12)
                } else {
                    (reference.year(), reference.month() - 1)
                };
                month_window(y, m)?
            }
            "this year" => year_window(reference.year())?,
            _ => year_window(reference.year() - 1)?,
        };
        return Some(hit(c.get(0)?, w));
    }
    None
}

/// Removes the matched span and tidies whitespace before punctuation.
pub fn strip_span(text: &str, span: (usize, usize)) -> String {
    let joined = format!("{} {}", &text[..span.0], &text[span.1..]);
    let collapsed = joined.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .replace(" ?", "?")
        .replace(" ,", ",")
        .replace(" .", ".")
}

/// `"September 2025"` for a window inside one month, `"2024"` for one inside
/// a year, otherwise empty.
pub fn describe_period(window: &TimeWindow) -> String {
    if window.start.year() == window.end.year() {
        if window.start.month() == window.end.month() {
            format!(
                "{} {}",
                MONTH_NAMES[window.start.month0() as usize],
                window.start.year()
            )
        } else {
            window.start.year().to_string()
        }
    } else {
        String::new()
    }
}
