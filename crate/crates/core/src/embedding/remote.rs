use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{Embedding, EmbeddingProvider};
use crate::error::EmbeddingError;

#[derive(Debug, Clone)]
pub struct RemoteEmbedderConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub dim: usize,
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub timeout: Duration,
}

/// Client for an embeddings service.
///
/// Request body: `{"model": ..., "input": [texts]}`. The response may be
/// either `{"data": [{"embedding": [...], "index": i}, ...]}` or
/// `{"embeddings": [[...], ...]}`; in both cases one array per input.
pub struct RemoteEmbedder {
    config: RemoteEmbedderConfig,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EmbeddingResponse {
    Data { data: Vec<DataItem> },
    Plain { embeddings: Vec<Vec<f64>> },
}

#[derive(Deserialize)]
struct DataItem {
    embedding: Vec<f64>,
    #[serde(default)]
    index: Option<usize>,
}

impl RemoteEmbedder {
    pub fn new(config: RemoteEmbedderConfig) -> Result<Self, EmbeddingError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| EmbeddingError::Provider {
                provider: "remote".into(),
                item: "client".into(),
                message: e.to_string(),
            })?;
        Ok(RemoteEmbedder { config, client })
    }

    fn fail(&self, item: String, message: impl Into<String>) -> EmbeddingError {
        EmbeddingError::Provider {
            provider: "remote".into(),
            item,
            message: message.into(),
        }
    }

    fn request(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        let label = || match texts {
            [one] => one.clone(),
            _ => format!("{:?} (+{} more)", texts[0], texts.len() - 1),
        };
        let mut req = self
            .client
            .post(&self.config.endpoint)
            .json(&json!({ "model": self.config.model, "input": texts }));
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| self.fail(label(), e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(self.fail(label(), format!("HTTP {status}: {body}")));
        }
        let parsed: EmbeddingResponse = resp
            .json()
            .map_err(|e| self.fail(label(), format!("bad response body: {e}")))?;
        let vectors: Vec<Vec<f64>> = match parsed {
            EmbeddingResponse::Plain { embeddings } => embeddings,
            EmbeddingResponse::Data { mut data } => {
                if data.iter().all(|d| d.index.is_some()) {
                    data.sort_by_key(|d| d.index);
                }
                data.into_iter().map(|d| d.embedding).collect()
            }
        };
        if vectors.len() != texts.len() {
            return Err(self.fail(
                label(),
                format!("expected {} vectors, got {}", texts.len(), vectors.len()),
            ));
        }
        vectors
            .into_iter()
            .zip(texts)
            .map(|(v, t)| {
                if v.len() != self.config.dim {
                    Err(self.fail(
                        t.clone(),
                        format!("dim {} but configured {}", v.len(), self.config.dim),
                    ))
                } else {
                    Ok(Embedding(v))
                }
            })
            .collect()
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn name(&self) -> &str {
        "remote"
    }

    fn dim(&self) -> usize {
        self.config.dim
    }

    fn embed(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        let mut out = self.request(&[text.to_string()])?;
        Ok(out.remove(0))
    }

    /// Splits `texts` into batches and sends at most `max_in_flight`
    /// requests at a time. Output order matches input order.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        let batches: Vec<&[String]> = texts.chunks(self.config.batch_size.max(1)).collect();
        let results: Vec<Mutex<Option<Result<Vec<Embedding>, EmbeddingError>>>> =
            batches.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.clamp(1, batches.len().max(1));
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= batches.len() {
                        break;
                    }
                    let r = self.request(batches[i]);
                    *results[i].lock().unwrap() = Some(r);
                });
            }
        });
        let mut out = Vec::with_capacity(texts.len());
        for slot in results {
            out.extend(slot.into_inner().unwrap().expect("every batch is processed")?);
        }
        Ok(out)
    }
}
