use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Historical,
    C1,
    C2,
    C3,
    Commonsense,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Historical,
        Category::C1,
        Category::C2,
        Category::C3,
        Category::Commonsense,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Historical => "historical",
            Category::C1 => "c1",
            Category::C2 => "c2",
            Category::C3 => "c3",
            Category::Commonsense => "commonsense",
        }
    }

    /// Column heading used in comparison tables.
    pub fn title(self) -> &'static str {
        match self {
            Category::Historical => "Historical",
            Category::C1 => "C1",
            Category::C2 => "C2",
            Category::C3 => "C3",
            Category::Commonsense => "Commonsense",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerOption {
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QAItem {
    pub id: String,
    pub category: Category,
    pub question: String,
    pub gold: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<AnswerOption>>,
}

impl QAItem {
    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.question.trim().is_empty() {
            return Err("empty question".into());
        }
        if self.gold.iter().all(|g| g.trim().is_empty()) {
            return Err("gold must contain at least one answer".into());
        }
        match (&self.options, self.category) {
            (Some(opts), Category::Commonsense) => {
                let labels: Vec<&str> = opts.iter().map(|o| o.label.trim()).collect();
                if labels.iter().collect::<HashSet<_>>().len() != labels.len() {
                    return Err("duplicate option labels".into());
                }
                let hits = self
                    .gold
                    .iter()
                    .filter(|g| labels.contains(&g.trim()))
                    .count();
                if self.gold.len() != 1 || hits != 1 {
                    return Err("commonsense gold must be exactly one option label".into());
                }
            }
            (None, Category::Commonsense) => {
                return Err("commonsense items need options".into());
            }
            (Some(_), other) => return Err(format!("options are only allowed on commonsense items, not {other}")),
            (None, _) => {}
        }
        Ok(())
    }

    /// The option whose label is the gold answer.
    pub fn gold_option(&self) -> Option<&AnswerOption> {
        let gold = self.gold.first()?.trim();
        self.options.as_ref()?.iter().find(|o| o.label.trim() == gold)
    }

    /// Question text as shown to the answering model: the question, then one
    /// `L. text` line per option.
    pub fn prompt_question(&self) -> String {
        let mut out = self.question.trim().to_string();
        for o in self.options.iter().flatten() {
            out.push_str(&format!("\n{}. {}", o.label.trim(), o.text.trim()));
        }
        out
    }
}

/// Reads and validates JSONL. Blank lines are skipped; ids must be unique.
pub fn parse_dataset<R: BufRead>(reader: R) -> Result<Vec<QAItem>, HarnessError> {
    let mut items = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| HarnessError::Dataset {
            line: line_no,
            message,
        };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let item: QAItem = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        item.validate().map_err(err)?;
        if !ids.insert(item.id.clone()) {
            return Err(err(format!("duplicate id {:?}", item.id)));
        }
        items.push(item);
    }
    if items.is_empty() {
        log::warn!("dataset is empty");
    }
    Ok(items)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<QAItem>, HarnessError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| HarnessError::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let items = parse_dataset(BufReader::new(file))?;
    let counts = category_counts(&items);
    log::info!(
        "loaded {} items from {}: {}",
        items.len(),
        path.display(),
        counts
            .iter()
            .map(|(c, n)| format!("{c}={n}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    Ok(items)
}

pub fn category_counts(items: &[QAItem]) -> BTreeMap<Category, usize> {
    let mut counts = BTreeMap::new();
    for it in items {
        *counts.entry(it.category).or_insert(0) += 1;
    }
    counts
}
