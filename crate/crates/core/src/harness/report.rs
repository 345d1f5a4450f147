use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::Category;
use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: String,
    pub category: Category,
    pub prediction: String,
    pub gold: Vec<String>,
    pub correct: bool,
    /// Wall-clock time for the item; omitted from deterministic runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<u64>,
    /// Stage failure that made the item count as incorrect.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub correct: usize,
    pub total: usize,
    /// Percent.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    /// Snapshot of the run configuration.
    pub config: serde_json::Value,
    pub accuracy: BTreeMap<Category, CategoryScore>,
    pub records: Vec<ItemRecord>,
}

fn file_err(path: &Path, e: impl ToString) -> HarnessError {
    HarnessError::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Flat CSV row; gold answers are joined with `|`.
#[derive(Serialize)]
struct CsvRow<'a> {
    id: &'a str,
    category: Category,
    prediction: &'a str,
    gold: String,
    correct: bool,
    latency_ms: Option<f64>,
    tokens: Option<u64>,
    error: Option<&'a str>,
}

impl Report {
    /// Accuracy per category is computed from `records`.
    pub fn new(name: impl Into<String>, config: serde_json::Value, records: Vec<ItemRecord>) -> Self {
        let mut accuracy: BTreeMap<Category, CategoryScore> = BTreeMap::new();
        for r in &records {
            let s = accuracy.entry(r.category).or_insert(CategoryScore {
                correct: 0,
                total: 0,
                accuracy: 0.0,
            });
            s.total += 1;
            s.correct += usize::from(r.correct);
        }
        for s in accuracy.values_mut() {
            s.accuracy = 100.0 * s.correct as f64 / s.total as f64;
        }
        Report {
            name: name.into(),
            config,
            accuracy,
            records,
        }
    }

    /// Unweighted mean over the categories present.
    pub fn overall(&self) -> Option<f64> {
        if self.accuracy.is_empty() {
            return None;
        }
        Some(self.accuracy.values().map(|s| s.accuracy).sum::<f64>() / self.accuracy.len() as f64)
    }

    /// Share of all items answered correctly.
    pub fn overall_weighted(&self) -> Option<f64> {
        if self.records.is_empty() {
            return None;
        }
        let correct = self.records.iter().filter(|r| r.correct).count();
        Some(100.0 * correct as f64 / self.records.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(CsvRow {
                id: &r.id,
                category: r.category,
                prediction: &r.prediction,
                gold: r.gold.join("|"),
                correct: r.correct,
                latency_ms: r.latency_ms,
                tokens: r.tokens,
                error: r.error.as_deref(),
            })
            .map_err(|e| HarnessError::Config(format!("csv: {e}")))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| HarnessError::Config(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `path` (JSON) and the same path with a `.csv` extension.
    /// Returns the CSV path.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<PathBuf, HarnessError> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
        }
        fs::write(path, self.to_json() + "\n").map_err(|e| file_err(path, e))?;
        let csv_path = path.with_extension("csv");
        fs::write(&csv_path, self.to_csv()?).map_err(|e| file_err(&csv_path, e))?;
        Ok(csv_path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
        serde_json::from_str(&text).map_err(|e| file_err(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub run: String,
    /// Accuracy per category; `None` when the run has no items in it.
    pub categories: BTreeMap<Category, Option<f64>>,
    pub overall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall_weighted: Option<f64>,
    /// True when some category is absent, so `overall` covers fewer than five.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub weighted: bool,
}

/// One row per report, in the order given.
pub fn aggregate(reports: &[Report], overall_both: bool) -> Comparison {
    let rows = reports
        .iter()
        .map(|r| {
            let categories: BTreeMap<Category, Option<f64>> = Category::ALL
                .into_iter()
                .map(|c| (c, r.accuracy.get(&c).map(|s| s.accuracy)))
                .collect();
            ComparisonRow {
                run: r.name.clone(),
                partial: categories.values().any(Option::is_none),
                categories,
                overall: r.overall(),
                overall_weighted: if overall_both { r.overall_weighted() } else { None },
            }
        })
        .collect();
    Comparison {
        rows,
        weighted: overall_both,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into())
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let mut header: Vec<String> = vec!["Run".into()];
        header.extend(Category::ALL.iter().map(|c| c.title().to_string()));
        header.push("Overall".into());
        if self.weighted {
            header.push("Overall (items)".into());
        }
        let mut rows: Vec<Vec<String>> = vec![header];
        for r in &self.rows {
            let mut row = vec![if r.partial { format!("{}*", r.run) } else { r.run.clone() }];
            row.extend(Category::ALL.iter().map(|c| cell(r.categories[c])));
            row.push(cell(r.overall));
            if self.weighted {
                row.push(cell(r.overall_weighted));
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (n, row) in rows.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
            if n == 0 {
                let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            }
        }
        if self.rows.iter().any(|r| r.partial) {
            out.push_str("* some categories absent; Overall is the mean over the categories present.\n");
        }
        out.push_str("Overall is the unweighted mean of category accuracies");
        if self.weighted {
            out.push_str("; Overall (items) weights every item equally");
        }
        out.push_str(".\n");
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serializes")
    }
}
