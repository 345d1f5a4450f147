//! Time-stamped knowledge quadruples and the indexed store that holds them.
//!
//! The store keeps items in load order. Two secondary indices are maintained
//! on every insert: an entity index keyed by [`normalize_entity`] that lists
//! every item under both its subject and its object, and a time index that
//! keeps item positions sorted by `(timestamp, position)`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::StoreError;

/// Trims, collapses internal whitespace runs and case-folds.
///
/// Every entity-keyed lookup and every equality check between entities goes
/// through this function.
pub fn normalize_entity(name: &str) -> String {
    crate::text::fold(name)
}

/// Parses a strict `YYYY-MM-DD` calendar date.
pub fn parse_date(value: &str) -> Result<NaiveDate, StoreError> {
    let v = value.trim();
    if v.len() != 10 {
        return Err(StoreError::BadDate(value.to_string()));
    }
    NaiveDate::parse_from_str(v, "%Y-%m-%d").map_err(|_| StoreError::BadDate(value.to_string()))
}

/// One fact: `(subject, relation, object, timestamp)` at day granularity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Quadruple {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub timestamp: NaiveDate,
}

/// Identity of a quadruple: normalized text fields plus the timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadKey {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub timestamp: NaiveDate,
}

impl Quadruple {
    /// Builds a validated quadruple. Text fields are trimmed; all three must
    /// be non-empty after whitespace normalization.
    pub fn new(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: impl Into<String>,
        timestamp: NaiveDate,
    ) -> Result<Self, StoreError> {
        let q = Quadruple {
            subject: subject.into().trim().to_string(),
            relation: relation.into().trim().to_string(),
            object: object.into().trim().to_string(),
            timestamp,
        };
        q.validate()?;
        Ok(q)
    }

    /// Like [`Quadruple::new`] but parses the timestamp from `YYYY-MM-DD`.
    pub fn parse(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: impl Into<String>,
        timestamp: &str,
    ) -> Result<Self, StoreError> {
        Self::new(subject, relation, object, parse_date(timestamp)?)
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        for (field, value) in [
            ("subject", &self.subject),
            ("relation", &self.relation),
            ("object", &self.object),
        ] {
            if normalize_entity(value).is_empty() {
                return Err(StoreError::EmptyField { field });
            }
        }
        Ok(())
    }

    pub fn key(&self) -> QuadKey {
        QuadKey {
            subject: normalize_entity(&self.subject),
            relation: normalize_entity(&self.relation),
            object: normalize_entity(&self.object),
            timestamp: self.timestamp,
        }
    }

    /// True when `entity` (already normalized) is this fact's subject or object.
    pub fn involves(&self, normalized_entity: &str) -> bool {
        normalize_entity(&self.subject) == normalized_entity
            || normalize_entity(&self.object) == normalized_entity
    }

    /// The text handed to the embedder: `"subject relation object"`.
    pub fn embedding_text(&self) -> String {
        format!("{} {} {}", self.subject, self.relation, self.object)
    }
}

impl fmt::Display for Quadruple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.subject, self.relation, self.object, self.timestamp
        )
    }
}

/// Inclusive date interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl TimeWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, StoreError> {
        if start > end {
            return Err(StoreError::InvertedWindow {
                start: start.to_string(),
                end: end.to_string(),
            });
        }
        Ok(TimeWindow { start, end })
    }

    pub fn parse(start: &str, end: &str) -> Result<Self, StoreError> {
        Self::new(parse_date(start)?, parse_date(end)?)
    }

    pub fn point(day: NaiveDate) -> Self {
        TimeWindow {
            start: day,
            end: day,
        }
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        self.start <= day && day <= self.end
    }

    pub fn is_point(&self) -> bool {
        self.start == self.end
    }
}

impl fmt::Display for TimeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} to {}", self.start, self.end)
    }
}

#[derive(Deserialize)]
struct RawQuadruple {
    subject: String,
    relation: String,
    object: String,
    timestamp: String,
}

/// Deduplicated, indexed collection of quadruples.
#[derive(Debug, Clone, Default)]
pub struct QuadrupleStore {
    items: Vec<Quadruple>,
    keys: HashSet<QuadKey>,
    entity_index: HashMap<String, Vec<usize>>,
    time_index: Vec<usize>,
}

impl PartialEq for QuadrupleStore {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items
    }
}

impl QuadrupleStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a store from quadruples, silently dropping duplicates (first kept).
    pub fn from_quadruples<I>(quads: I) -> Result<Self, StoreError>
    where
        I: IntoIterator<Item = Quadruple>,
    {
        let mut store = Self::new();
        for q in quads {
            store.insert(q)?;
        }
        Ok(store)
    }

    /// Loads a JSON Lines file. Blank lines are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(BufReader::new(file)).map_err(|e| match e {
            StoreError::Io { source, .. } => StoreError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, StoreError> {
        let mut store = Self::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| StoreError::Io {
                path: Default::default(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawQuadruple =
                serde_json::from_str(&line).map_err(|e| StoreError::MalformedLine {
                    line: line_no,
                    message: e.to_string(),
                })?;
            let timestamp = parse_date(&raw.timestamp).map_err(|_| StoreError::InvalidDate {
                line: line_no,
                value: raw.timestamp.clone(),
            })?;
            let quad = Quadruple::new(raw.subject, raw.relation, raw.object, timestamp).map_err(
                |e| StoreError::MalformedLine {
                    line: line_no,
                    message: e.to_string(),
                },
            )?;
            store.insert(quad)?;
        }
        Ok(store)
    }

    /// Canonical JSON Lines serialization, one quadruple per line, load order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for q in &self.items {
            out.push_str(&serde_json::to_string(q).expect("quadruple serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        let path = path.as_ref();
        let io_err = |source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        w.write_all(self.to_jsonl().as_bytes()).map_err(io_err)?;
        w.flush().map_err(io_err)
    }

    /// Returns `Ok(true)` if the quadruple was new, `Ok(false)` if an equal one
    /// is already present (the store is not modified).
    pub fn insert(&mut self, quad: Quadruple) -> Result<bool, StoreError> {
        quad.validate()?;
        let key = quad.key();
        if self.keys.contains(&key) {
            return Ok(false);
        }
        let pos = self.items.len();
        self.entity_index
            .entry(key.subject.clone())
            .or_default()
            .push(pos);
        if key.object != key.subject {
            self.entity_index
                .entry(key.object.clone())
                .or_default()
                .push(pos);
        }
        let ts = quad.timestamp;
        let at = self
            .time_index
            .partition_point(|&p| self.items[p].timestamp <= ts);
        self.time_index.insert(at, pos);
        self.keys.insert(key);
        self.items.push(quad);
        Ok(true)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Quadruple] {
        &self.items
    }

    pub fn get(&self, position: usize) -> Option<&Quadruple> {
        self.items.get(position)
    }

    pub fn contains(&self, quad: &Quadruple) -> bool {
        self.keys.contains(&quad.key())
    }

    /// Store positions filed under `entity`, in load order.
    pub fn entity_positions(&self, entity: &str) -> &[usize] {
        self.entity_index
            .get(&normalize_entity(entity))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Every normalized entity key in the index.
    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.entity_index.keys().map(String::as_str)
    }

    /// Facts where `entity` is subject or object, ascending by timestamp with
    /// load order breaking ties.
    pub fn events_for_entity(&self, entity: &str) -> Vec<&Quadruple> {
        let mut positions = self.entity_positions(entity).to_vec();
        positions.sort_by_key(|&p| (self.items[p].timestamp, p));
        positions.into_iter().map(|p| &self.items[p]).collect()
    }

    /// Facts dated inside `window` (inclusive), ascending by timestamp.
    pub fn events_in_window(&self, window: &TimeWindow) -> Vec<&Quadruple> {
        let lo = self
            .time_index
            .partition_point(|&p| self.items[p].timestamp < window.start);
        let hi = self
            .time_index
            .partition_point(|&p| self.items[p].timestamp <= window.end);
        self.time_index[lo..hi.max(lo)]
            .iter()
            .map(|&p| &self.items[p])
            .collect()
    }
}
