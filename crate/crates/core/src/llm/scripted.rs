//! Deterministic rule-based backend for tests and offline evaluation.
//!
//! The reply is a pure function of the prompt: the template marker selects
//! a handler and the handler reads the prompt's `## Section` blocks. Three
//! fixtures supply the "knowledge": an entity lexicon, a table of pre-window
//! facts (what a model would remember) and a commonsense answer table.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use chrono::NaiveDate;
use regex::Regex;
use serde::Deserialize;

use super::dates::{describe_period, extract_temporal, strip_span};
use super::{Completion, LlmBackend, TemplateId};
use crate::eeg::{parse_event_line, EventLine, Provenance};
use crate::error::LlmError;
use crate::store::{normalize_entity, parse_date, Quadruple, QuadrupleStore, TimeWindow};
use crate::text::{content_words, fold, tokens};

pub const UNKNOWN: &str = "UNKNOWN";

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct CommonsenseFact {
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    lexicon: Vec<String>,
    history: Vec<Quadruple>,
    commonsense: Vec<CommonsenseFact>,
}

fn fixture_err(path: &Path, message: impl ToString) -> LlmError {
    LlmError::Fixture {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn question_key(q: &str) -> String {
    fold(q).trim_end_matches(['?', '.', '!']).trim().to_string()
}

impl ScriptedBackend {
    pub fn new(
        lexicon: Vec<String>,
        history: Vec<Quadruple>,
        commonsense: Vec<CommonsenseFact>,
    ) -> Self {
        ScriptedBackend {
            lexicon: lexicon
                .into_iter()
                .map(|e| e.trim().to_string())
                .filter(|e| !e.is_empty())
                .collect(),
            history,
            commonsense,
        }
    }

    /// Lexicon: one entity per line, `#` comments allowed. History: JSONL
    /// quadruples. Commonsense: JSONL `{"question", "answer"}`.
    pub fn from_files(
        lexicon: impl AsRef<Path>,
        history: impl AsRef<Path>,
        commonsense: Option<&Path>,
    ) -> Result<Self, LlmError> {
        let lex_path = lexicon.as_ref();
        let lexicon = fs::read_to_string(lex_path)
            .map_err(|e| fixture_err(lex_path, e))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        let hist_path = history.as_ref();
        let history = QuadrupleStore::load(hist_path)
            .map_err(|e| fixture_err(hist_path, e))?
            .items()
            .to_vec();
        let mut facts = Vec::new();
        if let Some(path) = commonsense {
            let text = fs::read_to_string(path).map_err(|e| fixture_err(path, e))?;
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let fact: CommonsenseFact = serde_json::from_str(line)
                    .map_err(|e| fixture_err(path, format!("line {}: {e}", i + 1)))?;
                facts.push(fact);
            }
        }
        Ok(Self::new(lexicon, history, facts))
    }

    pub fn lexicon(&self) -> &[String] {
        &self.lexicon
    }

    pub fn history(&self) -> &[Quadruple] {
        &self.history
    }

    /// The full reply text for a rendered prompt.
    pub fn respond(&self, prompt: &str) -> Result<String, LlmError> {
        let id = TemplateId::from_prompt(prompt).ok_or(LlmError::UnknownTemplate)?;
        let p = Prompt::parse(prompt);
        Ok(match id {
            TemplateId::P1 => self.analyze(&p),
            TemplateId::P2 => self.recall_history(&p),
            TemplateId::P3 => self.augment(&p),
            TemplateId::P4 => answer_line(&self.answer_views(&p)),
            TemplateId::Direct => answer_line(&self.answer_direct(&p)),
            TemplateId::Rag => answer_line(&self.answer_documents(&p)),
        })
    }

    /// Lexicon entries named by `question`. An entry matches if it occurs
    /// verbatim (case-folded) or if all of its content words occur. Entries
    /// contained in a longer match are dropped. Lexicon order is kept.
    pub fn match_entities(&self, question: &str) -> Vec<String> {
        let folded = fold(question);
        let words: HashSet<String> = content_words(question).into_iter().collect();
        let mut hits: Vec<&String> = self
            .lexicon
            .iter()
            .filter(|e| {
                let cw = content_words(e);
                folded.contains(&fold(e))
                    || (!cw.is_empty() && cw.iter().all(|w| words.contains(w)))
            })
            .collect();
        let folded_hits: Vec<String> = hits.iter().map(|e| fold(e)).collect();
        hits.retain(|e| {
            let f = fold(e);
            !folded_hits
                .iter()
                .any(|other| other.len() > f.len() && other.contains(&f))
        });
        let mut seen = HashSet::new();
        hits.into_iter()
            .filter(|e| seen.insert(fold(e)))
            .cloned()
            .collect()
    }

    fn analyze(&self, p: &Prompt) -> String {
        let question = p.question();
        let reference = p
            .section("Window")
            .and_then(|w| {
                w.lines()
                    .find_map(|l| l.trim().strip_prefix("Reference date:"))
                    .and_then(|d| parse_date(d.trim()).ok())
            })
            .or_else(|| p.section("Window").and_then(|w| iso_dates(w).into_iter().last()));
        let temporal = reference.and_then(|r| extract_temporal(&question, r));
        let q0 = match &temporal {
            Some(m) => strip_span(&question, m.span),
            None => question.clone(),
        };
        let mut out = format!(
            "```analysis\nentities: {}\nquery: {q0}\n",
            self.match_entities(&question).join(" | ")
        );
        if let Some(m) = temporal {
            out.push_str(&format!("start: {}\nend: {}\n", m.window.start, m.window.end));
        }
        out.push_str("```\n");
        out
    }

    fn recall_history(&self, p: &Prompt) -> String {
        let q0 = p.question();
        let words: HashSet<String> = content_words(&q0).into_iter().collect();
        let end = p.window().map(|w| w.end);
        let mut out = String::from("```quads\n");
        for q in &self.history {
            let subject = content_words(&q.subject);
            let about = !subject.is_empty() && subject.iter().all(|w| words.contains(w));
            if about && end.is_none_or(|e| q.timestamp <= e) {
                out.push_str(&format!(
                    "{} | {} | {} | {}\n",
                    q.subject, q.relation, q.object, q.timestamp
                ));
            }
        }
        out.push_str("```\n");
        out
    }

    /// Follow-up rules:
    /// * "which X's Y ..." with no graph event whose subject mentions Y:
    ///   ask for the lexicon entries mentioning Y.
    /// * lexicon entities named in the question but absent from the graph.
    fn augment(&self, p: &Prompt) -> String {
        let question = p.question();
        let graph: Vec<EventLine> = p
            .section("Graph")
            .map(|g| g.lines().filter_map(parse_event_line).collect())
            .unwrap_or_default();
        let in_graph = |entity: &str| {
            let n = normalize_entity(entity);
            graph
                .iter()
                .any(|e| normalize_entity(&e.subject) == n || normalize_entity(&e.object) == n)
        };
        let mut wanted: Vec<String> = Vec::new();
        if let Some(y) = possessive_target(&question) {
            let covered = graph.iter().any(|e| tokens(&e.subject).contains(&y));
            if !covered {
                wanted.extend(
                    self.lexicon
                        .iter()
                        .filter(|e| tokens(e).contains(&y) && !in_graph(e))
                        .cloned(),
                );
            }
        }
        for e in self.match_entities(&question) {
            if !in_graph(&e) && !wanted.contains(&e) {
                wanted.push(e);
            }
        }
        if wanted.is_empty() {
            return "NONE\n".into();
        }
        let period = p.window().map(|w| describe_period(&w)).unwrap_or_default();
        let mut query = wanted.join(", ");
        if !period.is_empty() {
            query.push(' ');
            query.push_str(&period);
        }
        format!("FOLLOW-UP: {query}\n")
    }

    fn commonsense_choice(&self, p: &Prompt) -> Option<String> {
        let options = p.options();
        if options.is_empty() {
            return None;
        }
        let key = question_key(&p.question());
        let fact = self.commonsense.iter().find(|f| question_key(&f.question) == key);
        let choice = fact.and_then(|f| {
            options
                .iter()
                .find(|(_, text)| fold(text) == fold(&f.answer))
                .map(|(label, _)| label.clone())
        });
        Some(choice.unwrap_or_else(|| UNKNOWN.into()))
    }

    fn answer_views(&self, p: &Prompt) -> String {
        if let Some(choice) = self.commonsense_choice(p) {
            return choice;
        }
        let question = p.question();
        let Some(window) = p.window() else {
            return UNKNOWN.into();
        };
        let temporal: Vec<EventLine> = p
            .section("Temporal view")
            .map(|v| v.lines().filter_map(parse_event_line).collect())
            .unwrap_or_default();
        let entity_views = p.section("Entity views").map(parse_entity_views).unwrap_or_default();
        if temporal.is_empty() && entity_views.values().all(Vec::is_empty) {
            return UNKNOWN.into();
        }

        if let Some(y) = possessive_target(&question) {
            return self
                .which_owner(&question, &y, &window, &entity_views)
                .unwrap_or_else(|| UNKNOWN.into());
        }

        let mut events = temporal;
        events.extend(entity_views.into_values().flatten());
        answer_from_events(&question, &window, events).unwrap_or_else(|| UNKNOWN.into())
    }

    /// "Which X's Y ...": an in-window event whose subject mentions Y,
    /// corroborated by an in-window event in the view of an entity the
    /// question names. The answer is the subject text before Y.
    fn which_owner(
        &self,
        question: &str,
        y: &str,
        window: &TimeWindow,
        views: &BTreeMap<String, Vec<EventLine>>,
    ) -> Option<String> {
        let folded_q = fold(question);
        let corroborated = views
            .iter()
            .filter(|(name, _)| folded_q.contains(&fold(name)))
            .any(|(_, evs)| evs.iter().any(|e| window.contains(e.date)));
        if !corroborated {
            return None;
        }
        let mut candidates: Vec<&EventLine> = views
            .values()
            .flatten()
            .filter(|e| window.contains(e.date) && tokens(&e.subject).iter().any(|t| t == y))
            .collect();
        candidates.sort_by_key(|e| e.date);
        let event = candidates.last()?;
        let owner: Vec<&str> = event
            .subject
            .split_whitespace()
            .take_while(|w| tokens(w).first().map(String::as_str) != Some(y))
            .collect();
        (!owner.is_empty()).then(|| owner.join(" "))
    }

    fn history_answer(&self, question: &str, window: &TimeWindow) -> Option<String> {
        let events = self
            .history
            .iter()
            .map(|q| EventLine {
                date: q.timestamp,
                subject: q.subject.clone(),
                relation: q.relation.clone(),
                object: q.object.clone(),
                provenance: Provenance::Historical,
            })
            .collect();
        answer_from_events(question, window, events)
    }

    /// Closed-book: refuses anything that reaches the knowledge window,
    /// otherwise answers from the history table.
    fn answer_direct(&self, p: &Prompt) -> String {
        if let Some(choice) = self.commonsense_choice(p) {
            return choice;
        }
        let dates = p.section("Window").map(iso_dates).unwrap_or_default();
        let (Some(&cutoff), Some(&reference)) = (dates.first(), dates.last()) else {
            return UNKNOWN.into();
        };
        let question = p.question();
        match extract_temporal(&question, reference) {
            Some(m) if m.window.end < cutoff => self
                .history_answer(&question, &m.window)
                .unwrap_or_else(|| UNKNOWN.into()),
            _ => UNKNOWN.into(),
        }
    }

    /// Answers from the documents. A point question with no relevant
    /// document at or before its date falls back to the earliest relevant
    /// document, which is how retrieved recent facts crowd out old ones.
    fn answer_documents(&self, p: &Prompt) -> String {
        if let Some(choice) = self.commonsense_choice(p) {
            return choice;
        }
        let question = p.question();
        let docs: Vec<EventLine> = p
            .section("Documents")
            .map(|d| d.lines().filter_map(parse_event_line).collect())
            .unwrap_or_default();
        let reference = docs
            .iter()
            .map(|d| d.date)
            .max()
            .unwrap_or(NaiveDate::MAX);
        let window = extract_temporal(&question, reference)
            .map(|m| m.window)
            .unwrap_or(TimeWindow {
                start: NaiveDate::MIN,
                end: NaiveDate::MAX,
            });
        if let Some(a) = answer_from_events(&question, &window, docs.clone()) {
            return a;
        }
        if !is_plural(&question) {
            let mut relevant = most_relevant(&question, docs.iter().collect());
            relevant.sort_by_key(|e| e.date);
            if let Some(first) = relevant.first() {
                return first.object.clone();
            }
        }
        self.history_answer(&question, &window)
            .unwrap_or_else(|| UNKNOWN.into())
    }
}

impl LlmBackend for ScriptedBackend {
    fn kind(&self) -> &str {
        "scripted"
    }

    fn complete(&self, prompt: &str) -> Result<Completion, LlmError> {
        self.respond(prompt).map(Completion::text)
    }
}

fn answer_line(answer: &str) -> String {
    format!("ANSWER: {answer}\n")
}

fn iso_dates(text: &str) -> Vec<NaiveDate> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"\b\d{4}-\d{2}-\d{2}\b").unwrap());
    re.find_iter(text)
        .filter_map(|m| parse_date(m.as_str()).ok())
        .collect()
}

/// Y in "which X's Y ..." (straight or curly apostrophe).
fn possessive_target(question: &str) -> Option<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"(?i)^\s*which\s+\w+['’]s\s+(\w+)").unwrap());
    re.captures(question).map(|c| c[1].to_lowercase())
}

fn is_plural(question: &str) -> bool {
    let f = fold(question);
    f.contains("at any point") || tokens(&f).iter().any(|t| t == "were")
}

/// Events whose subject and relation share the most content words with the
/// question (at least one).
fn most_relevant<'a>(question: &str, events: Vec<&'a EventLine>) -> Vec<&'a EventLine> {
    let q: HashSet<String> = content_words(question).into_iter().collect();
    let overlap = |e: &EventLine| {
        content_words(&format!("{} {}", e.subject, e.relation))
            .into_iter()
            .collect::<HashSet<_>>()
            .intersection(&q)
            .count()
    };
    let best = events.iter().map(|e| overlap(e)).max().unwrap_or(0);
    if best == 0 {
        return Vec::new();
    }
    events.into_iter().filter(|e| overlap(e) == best).collect()
}

/// Range questions: distinct objects of relevant in-window events, in date
/// order. Point questions: the object of the latest relevant event on or
/// before the window end. `None` when no event qualifies.
fn answer_from_events(
    question: &str,
    window: &TimeWindow,
    events: Vec<EventLine>,
) -> Option<String> {
    let mut seen = HashSet::new();
    let mut events: Vec<EventLine> = events
        .into_iter()
        .filter(|e| seen.insert((e.date, e.subject.clone(), e.relation.clone(), e.object.clone())))
        .collect();
    events.sort_by_key(|e| e.date);
    if is_plural(question) {
        let in_window = events.iter().filter(|e| window.contains(e.date)).collect();
        let mut names: Vec<&str> = Vec::new();
        for e in most_relevant(question, in_window) {
            if !names.contains(&e.object.as_str()) {
                names.push(&e.object);
            }
        }
        return (!names.is_empty()).then(|| names.join(", "));
    }
    let eligible = events.iter().filter(|e| e.date <= window.end).collect();
    most_relevant(question, eligible)
        .last()
        .map(|e| e.object.clone())
}

fn parse_entity_views(text: &str) -> BTreeMap<String, Vec<EventLine>> {
    let mut views = BTreeMap::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        if let Some(name) = line.trim().strip_prefix("Entity:") {
            let name = name.trim().to_string();
            views.entry(name.clone()).or_insert_with(Vec::new);
            current = Some(name);
        } else if let (Some(name), Some(ev)) = (&current, parse_event_line(line)) {
            views.get_mut(name).expect("inserted above").push(ev);
        }
    }
    views
}

/// A rendered prompt split into `## Section` blocks.
struct Prompt {
    sections: Vec<(String, String)>,
}

impl Prompt {
    fn parse(text: &str) -> Self {
        let mut sections: Vec<(String, String)> = Vec::new();
        for line in text.lines() {
            if let Some(name) = line.strip_prefix("## ") {
                sections.push((name.trim().to_string(), String::new()));
            } else if let Some((_, body)) = sections.last_mut() {
                body.push_str(line);
                body.push('\n');
            }
        }
        Prompt { sections }
    }

    fn section(&self, name: &str) -> Option<&str> {
        self.sections
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, b)| b.as_str())
    }

    /// First non-blank line of the Question section.
    fn question(&self) -> String {
        self.section("Question")
            .and_then(|q| q.lines().map(str::trim).find(|l| !l.is_empty()))
            .unwrap_or_default()
            .to_string()
    }

    /// `(label, text)` for lines like `A. Sirius` in the Question section.
    fn options(&self) -> Vec<(String, String)> {
        static RE: OnceLock<Regex> = OnceLock::new();
        let re = RE.get_or_init(|| Regex::new(r"^\s*([A-Z])[.)]\s+(.+?)\s*$").unwrap());
        self.section("Question")
            .map(|q| {
                q.lines()
                    .skip_while(|l| l.trim().is_empty())
                    .skip(1)
                    .filter_map(|l| re.captures(l).map(|c| (c[1].to_string(), c[2].to_string())))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// `start to end` from the Window section.
    fn window(&self) -> Option<TimeWindow> {
        let dates = iso_dates(self.section("Window")?);
        match dates.as_slice() {
            [start, end, ..] => TimeWindow::new(*start, *end).ok(),
            [day] => Some(TimeWindow::point(*day)),
            [] => None,
        }
    }
}

/// Default fixture locations relative to the crate root.
pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}
