//! Dense text embeddings behind a provider trait.
//!
//! Two providers ship with the crate: [`LocalEmbedder`], a deterministic
//! hashed bag-of-words model used in tests and offline runs, and
//! [`RemoteEmbedder`], a client for an HTTP embeddings service.
//! [`VectorIndex`] embeds every quadruple in a store and answers brute-force
//! nearest-neighbour queries.

mod index;
mod local;
mod remote;

pub use index::{Neighbor, VectorIndex};
pub use local::{token_hash, LocalEmbedder, HASH_SEED, MIN_DIM};
pub use remote::{RemoteEmbedder, RemoteEmbedderConfig};

use serde::{Deserialize, Serialize};

use crate::error::EmbeddingError;

/// A fixed-length real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn zeros(dim: usize) -> Self {
        Embedding(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

/// Anything that can turn text into a vector of a fixed dimension.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn embed(&self, text: &str) -> Result<Embedding, EmbeddingError>;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// `dot(a, b) / (|a| |b|)`, or 0 when either vector has zero norm.
///
/// The result is clamped to `[-1, 1]` to absorb rounding.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64, EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.0.iter().zip(&b.0) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Maps a cosine in `[-1, 1]` to a similarity in `[0, 1]` by clamping
/// negatives to zero.
pub fn clamp_similarity(cosine: f64) -> f64 {
    cosine.clamp(0.0, 1.0)
}
