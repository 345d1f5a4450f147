use super::{Embedding, EmbeddingProvider};
use crate::error::EmbeddingError;
use crate::text::tokens;

/// Smallest dimension the local embedder accepts.
pub const MIN_DIM: usize = 16;

/// Seed folded into the FNV-1a offset basis.
pub const HASH_SEED: u64 = 0x6368_726f_6e6f_7321;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Seeded 64-bit token hash: FNV-1a over the UTF-8 bytes, starting from
/// `FNV_OFFSET ^ HASH_SEED`, followed by the SplitMix64 finalizer.
///
/// The bucket of a token is `hash % dim` and its sign is bit 63
/// (set means -1).
pub fn token_hash(token: &str) -> u64 {
    let mut h = FNV_OFFSET ^ HASH_SEED;
    for b in token.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Hashed signed bag-of-words embedder. Pure and platform independent.
#[derive(Debug, Clone)]
pub struct LocalEmbedder {
    dim: usize,
}

impl LocalEmbedder {
    pub fn new(dim: usize) -> Result<Self, EmbeddingError> {
        if dim < MIN_DIM {
            return Err(EmbeddingError::DimensionTooSmall { min: MIN_DIM, got: dim });
        }
        Ok(LocalEmbedder { dim })
    }

    /// Tokenizes on non-alphanumeric boundaries, case-folds, accumulates
    /// `±1` per token into its bucket and L2-normalizes. Text without tokens
    /// (or whose contributions cancel) maps to the zero vector.
    pub fn embed_text(&self, text: &str) -> Embedding {
        let mut values = vec![0.0f64; self.dim];
        for tok in tokens(text) {
            let h = token_hash(&tok);
            let bucket = (h % self.dim as u64) as usize;
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            values[bucket] += sign;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        Embedding(values)
    }
}

impl EmbeddingProvider for LocalEmbedder {
    fn name(&self) -> &str {
        "local"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        Ok(self.embed_text(text))
    }
}
