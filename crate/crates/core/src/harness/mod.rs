//! Benchmark items, the three answering methods, scoring and reports.

mod dataset;
mod pipeline;
mod report;
mod scoring;

pub use dataset::{category_counts, load_dataset, parse_dataset, AnswerOption, Category, QAItem};
pub use pipeline::{Ablation, Engine, Method, RunConfig, Trace};
pub use report::{aggregate, CategoryScore, Comparison, ComparisonRow, ItemRecord, Report};
pub use scoring::{exact_match, normalize_answer};
