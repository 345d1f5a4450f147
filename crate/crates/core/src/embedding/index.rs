use std::cmp::Ordering;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{clamp_similarity, cosine_similarity, Embedding, EmbeddingProvider};
use crate::error::EmbeddingError;
use crate::store::{Quadruple, QuadrupleStore};

/// One nearest-neighbour hit: a store position and its clamped similarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub position: usize,
    pub sim: f64,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    provider: String,
    dim: usize,
    vectors: Vec<Embedding>,
}

/// Embeddings of every quadruple in a store. Vector `i` belongs to store item `i`.
#[derive(Clone)]
pub struct VectorIndex {
    store: Arc<QuadrupleStore>,
    provider: Arc<dyn EmbeddingProvider>,
    vectors: Vec<Embedding>,
}

impl std::fmt::Debug for VectorIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorIndex")
            .field("provider", &self.provider.name())
            .field("dim", &self.provider.dim())
            .field("len", &self.vectors.len())
            .finish()
    }
}

impl VectorIndex {
    /// Embeds each quadruple as `"subject relation object"`.
    pub fn build(
        store: Arc<QuadrupleStore>,
        provider: Arc<dyn EmbeddingProvider>,
    ) -> Result<Self, EmbeddingError> {
        let texts: Vec<String> = store.items().iter().map(Quadruple::embedding_text).collect();
        let vectors = if texts.is_empty() {
            Vec::new()
        } else {
            provider.embed_batch(&texts)?
        };
        if vectors.len() != texts.len() {
            return Err(EmbeddingError::Provider {
                provider: provider.name().to_string(),
                item: format!("batch of {}", texts.len()),
                message: format!("returned {} vectors", vectors.len()),
            });
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.dim() != provider.dim() {
                return Err(EmbeddingError::Provider {
                    provider: provider.name().to_string(),
                    item: texts[i].clone(),
                    message: format!("vector has dim {}, expected {}", v.dim(), provider.dim()),
                });
            }
        }
        Ok(VectorIndex {
            store,
            provider,
            vectors,
        })
    }

    pub fn store(&self) -> &QuadrupleStore {
        &self.store
    }

    pub fn shared_store(&self) -> Arc<QuadrupleStore> {
        Arc::clone(&self.store)
    }

    pub fn provider(&self) -> &dyn EmbeddingProvider {
        self.provider.as_ref()
    }

    pub fn vectors(&self) -> &[Embedding] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn quad(&self, position: usize) -> &Quadruple {
        &self.store.items()[position]
    }

    /// Embeds `query` with the index's provider and scans all vectors.
    pub fn nearest(&self, query: &str, n: usize) -> Result<Vec<Neighbor>, EmbeddingError> {
        let q = self.provider.embed(query)?;
        self.nearest_to(&q, n)
    }

    /// Brute-force scan: clamped cosine, descending, ties by store position;
    /// returns `min(n, len)` hits.
    pub fn nearest_to(&self, query: &Embedding, n: usize) -> Result<Vec<Neighbor>, EmbeddingError> {
        let mut hits = self
            .vectors
            .iter()
            .enumerate()
            .map(|(position, v)| {
                Ok(Neighbor {
                    position,
                    sim: clamp_similarity(cosine_similarity(query, v)?),
                })
            })
            .collect::<Result<Vec<_>, EmbeddingError>>()?;
        hits.sort_by(|a, b| {
            b.sim
                .partial_cmp(&a.sim)
                .unwrap_or(Ordering::Equal)
                .then(a.position.cmp(&b.position))
        });
        hits.truncate(n);
        Ok(hits)
    }

    /// JSON document with the provider name, dimension and all vectors.
    pub fn to_json(&self) -> String {
        let file = IndexFile {
            provider: self.provider.name().to_string(),
            dim: self.provider.dim(),
            vectors: self.vectors.clone(),
        };
        serde_json::to_string(&file).expect("index serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
        fs::write(path.as_ref(), self.to_json())
            .map_err(|e| EmbeddingError::IndexFile(format!("{}: {e}", path.as_ref().display())))
    }

    /// Loads vectors written by [`VectorIndex::save`], checking that they
    /// match the store size and the provider's name and dimension.
    pub fn load(
        path: impl AsRef<Path>,
        store: Arc<QuadrupleStore>,
        provider: Arc<dyn EmbeddingProvider>,
    ) -> Result<Self, EmbeddingError> {
        let text = fs::read_to_string(path.as_ref())
            .map_err(|e| EmbeddingError::IndexFile(format!("{}: {e}", path.as_ref().display())))?;
        let file: IndexFile =
            serde_json::from_str(&text).map_err(|e| EmbeddingError::IndexFile(e.to_string()))?;
        if file.provider != provider.name() || file.dim != provider.dim() {
            return Err(EmbeddingError::IndexFile(format!(
                "index built with {}/{} but provider is {}/{}",
                file.provider,
                file.dim,
                provider.name(),
                provider.dim()
            )));
        }
        if file.vectors.len() != store.len() {
            return Err(EmbeddingError::IndexFile(format!(
                "index holds {} vectors, store holds {} items",
                file.vectors.len(),
                store.len()
            )));
        }
        if let Some(v) = file.vectors.iter().find(|v| v.dim() != file.dim) {
            return Err(EmbeddingError::IndexFile(format!(
                "vector of dim {} in a dim {} index",
                v.dim(),
                file.dim
            )));
        }
        Ok(VectorIndex {
            store,
            provider,
            vectors: file.vectors,
        })
    }
}
