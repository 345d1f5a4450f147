//! Time-aware retrieval and temporal reasoning over evolving facts.

pub mod embedding;
pub mod config;
pub mod eeg;
pub mod error;
pub mod harness;
pub mod llm;
pub mod retrieval;
pub mod store;
pub mod text;
