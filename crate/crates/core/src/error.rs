//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while validating, loading or mutating the quadruple store.
#[derive(Debug, Error)]
pub enum StoreError {
    #[error("line {line}: malformed record: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("line {line}: invalid date {value:?}")]
    InvalidDate { line: usize, value: String },

    #[error("invalid date {0:?}")]
    BadDate(String),

    #[error("quadruple field `{field}` is empty")]
    EmptyField { field: &'static str },

    #[error("time window start {start} is after end {end}")]
    InvertedWindow { start: String, end: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("embedding dimension must be at least {min}, got {got}")]
    DimensionTooSmall { min: usize, got: usize },

    #[error("provider `{provider}` failed on item {item}: {message}")]
    Provider {
        provider: String,
        item: String,
        message: String,
    },

    #[error("vector index file: {0}")]
    IndexFile(String),
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("invalid retrieval parameters: {0}")]
    InvalidParams(String),

    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("operation `{op}` requires stage {expected}, graph is at stage {actual}")]
    Stage {
        op: &'static str,
        expected: &'static str,
        actual: &'static str,
    },

    #[error("graph document invalid at `{path}`: {message}")]
    Parse { path: String, message: String },
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("backend request failed: {0}")]
    Backend(String),

    #[error("could not parse {stage} response after re-prompt: {message}\n--- raw response ---\n{raw}")]
    Unparseable {
        stage: &'static str,
        message: String,
        raw: String,
    },

    #[error("prompt template {id}: {message}")]
    Template { id: String, message: String },

    #[error("unrecognized template id in prompt")]
    UnknownTemplate,

    #[error("query is empty")]
    EmptyQuery,

    #[error("fixture {path}: {message}")]
    Fixture { path: PathBuf, message: String },
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("dataset line {line}: {message}")]
    Dataset { line: usize, message: String },

    #[error("invalid run configuration: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
}

/// Top-level error used by the pipeline and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
