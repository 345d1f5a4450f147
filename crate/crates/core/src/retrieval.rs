//! Time-aware re-ranking of semantic candidates.
//!
//! For a query entity and a window `[start, end]`:
//!
//! ```text
//! delta(t)   = start - t   if t < start
//!              t - end     if t > end
//!              0           otherwise            (days)
//! time(t)    = exp(-delta(t) / tau_days)
//! score      = alpha * sim + (1 - alpha) * time(t)
//! ```
//!
//! Candidates come from the top `candidate_pool` semantic neighbours, are
//! re-scored, sorted by `(score desc, delta asc, store position asc)` and
//! truncated to `top_n`.

use std::cmp::Ordering;
use std::collections::HashMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{Neighbor, VectorIndex};
use crate::error::RetrievalError;
use crate::store::{normalize_entity, Quadruple, TimeWindow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalParams {
    /// Weight of semantic similarity; `1 - alpha` goes to the time score.
    pub alpha: f64,
    pub tau_days: f64,
    /// Number of semantic neighbours re-scored per query.
    pub candidate_pool: usize,
    /// Number of candidates kept per query.
    pub top_n: usize,
    /// Optional cap on the merged multi-entity list.
    pub pooled_cap: Option<usize>,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        RetrievalParams {
            alpha: 0.75,
            tau_days: 180.0,
            candidate_pool: 50,
            top_n: 4,
            pooled_cap: None,
        }
    }
}

impl RetrievalParams {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        let bad = |m: String| Err(RetrievalError::InvalidParams(m));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must be in [0, 1], got {}", self.alpha));
        }
        if !(self.tau_days > 0.0 && self.tau_days.is_finite()) {
            return bad(format!("tau_days must be positive, got {}", self.tau_days));
        }
        if self.top_n < 1 {
            return bad("top_n must be at least 1".into());
        }
        if self.candidate_pool < self.top_n {
            return bad(format!(
                "candidate_pool ({}) must be >= top_n ({})",
                self.candidate_pool, self.top_n
            ));
        }
        if self.pooled_cap == Some(0) {
            return bad("pooled_cap must be at least 1 when set".into());
        }
        Ok(())
    }
}

/// Days between `t` and the nearest edge of `window`; zero inside it.
pub fn temporal_distance(t: NaiveDate, window: &TimeWindow) -> f64 {
    if t < window.start {
        (window.start - t).num_days() as f64
    } else if t > window.end {
        (t - window.end).num_days() as f64
    } else {
        0.0
    }
}

/// Exponential decay `exp(-delta / tau)`.
pub fn time_score(delta_days: f64, tau_days: f64) -> f64 {
    (-delta_days / tau_days).exp()
}

/// `alpha * sim + (1 - alpha) * tscore`.
pub fn combined_score(sim: f64, tscore: f64, alpha: f64) -> f64 {
    alpha * sim + (1.0 - alpha) * tscore
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub quad: Quadruple,
    /// Position of the quadruple in the store.
    pub position: usize,
    pub sim: f64,
    pub delta_days: f64,
    pub time_score: f64,
    pub score: f64,
}

impl ScoredCandidate {
    fn new(index: &VectorIndex, hit: Neighbor, window: &TimeWindow, alpha: f64, tau: f64) -> Self {
        let quad = index.quad(hit.position).clone();
        let delta_days = temporal_distance(quad.timestamp, window);
        let ts = time_score(delta_days, tau);
        ScoredCandidate {
            score: combined_score(hit.sim, ts, alpha),
            quad,
            position: hit.position,
            sim: hit.sim,
            delta_days,
            time_score: ts,
        }
    }
}

/// Ordering used for every ranked list: score desc, delta asc, position asc.
pub fn rank_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.delta_days.total_cmp(&b.delta_days))
        .then(a.position.cmp(&b.position))
}

/// Time-aware retrieval for one query string.
pub fn retrieve(
    index: &VectorIndex,
    entity_query: &str,
    window: &TimeWindow,
    params: &RetrievalParams,
) -> Result<Vec<ScoredCandidate>, RetrievalError> {
    params.validate()?;
    let hits = index.nearest(entity_query, params.candidate_pool)?;
    let mut scored: Vec<ScoredCandidate> = hits
        .into_iter()
        .map(|h| ScoredCandidate::new(index, h, window, params.alpha, params.tau_days))
        .collect();
    scored.sort_by(rank_order);
    scored.truncate(params.top_n);
    Ok(scored)
}

/// Pure semantic retrieval: the top `top_n` neighbours in similarity order.
///
/// Candidates carry their time terms for inspection, but `score` equals
/// `sim` and the order is the index's nearest-neighbour order.
pub fn retrieve_semantic(
    index: &VectorIndex,
    query: &str,
    window: &TimeWindow,
    top_n: usize,
    tau_days: f64,
) -> Result<Vec<ScoredCandidate>, RetrievalError> {
    if top_n < 1 {
        return Err(RetrievalError::InvalidParams("top_n must be at least 1".into()));
    }
    Ok(index
        .nearest(query, top_n)?
        .into_iter()
        .map(|h| ScoredCandidate::new(index, h, window, 1.0, tau_days))
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MultiRetrieval {
    pub candidates: Vec<ScoredCandidate>,
    /// Entity strings dropped because they were blank after normalization.
    pub skipped: Vec<String>,
}

/// Runs [`retrieve`] for every entity (concurrently), unions the results,
/// keeps the best score per quadruple and re-sorts.
pub fn retrieve_multi(
    index: &VectorIndex,
    entities: &[String],
    window: &TimeWindow,
    params: &RetrievalParams,
) -> Result<MultiRetrieval, RetrievalError> {
    params.validate()?;
    fan_out(entities, params.pooled_cap, |e| retrieve(index, e, window, params))
}

/// [`retrieve_multi`] with the time terms switched off: per-entity
/// [`retrieve_semantic`] merged by similarity.
pub fn retrieve_multi_semantic(
    index: &VectorIndex,
    entities: &[String],
    window: &TimeWindow,
    params: &RetrievalParams,
) -> Result<MultiRetrieval, RetrievalError> {
    params.validate()?;
    fan_out(entities, params.pooled_cap, |e| {
        retrieve_semantic(index, e, window, params.top_n, params.tau_days)
    })
}

fn fan_out<F>(
    entities: &[String],
    pooled_cap: Option<usize>,
    per_entity: F,
) -> Result<MultiRetrieval, RetrievalError>
where
    F: Fn(&str) -> Result<Vec<ScoredCandidate>, RetrievalError> + Sync,
{
    let mut skipped = Vec::new();
    let mut seen = Vec::<String>::new();
    let mut queries = Vec::new();
    for e in entities {
        let norm = normalize_entity(e);
        if norm.is_empty() {
            log::warn!("skipping blank entity {e:?}");
            skipped.push(e.clone());
            continue;
        }
        if !seen.contains(&norm) {
            seen.push(norm);
            queries.push(e.trim().to_string());
        }
    }
    let per: Vec<Vec<ScoredCandidate>> = queries
        .par_iter()
        .map(|q| per_entity(q))
        .collect::<Result<_, _>>()?;

    let mut best: HashMap<usize, ScoredCandidate> = HashMap::new();
    for cand in per.into_iter().flatten() {
        match best.get(&cand.position) {
            Some(existing) if rank_order(existing, &cand) != Ordering::Greater => {}
            _ => {
                best.insert(cand.position, cand);
            }
        }
    }
    let mut candidates: Vec<ScoredCandidate> = best.into_values().collect();
    candidates.sort_by(rank_order);
    if let Some(cap) = pooled_cap {
        candidates.truncate(cap);
    }
    Ok(MultiRetrieval {
        candidates,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{EmbeddingProvider, LocalEmbedder};
    use crate::store::{parse_date, QuadrupleStore};
    use std::sync::Arc;

    fn d(s: &str) -> NaiveDate {
        parse_date(s).unwrap()
    }

    fn richest_index() -> VectorIndex {
        let store = QuadrupleStore::from_reader(
            include_str!("../fixtures/richest_store.jsonl").as_bytes(),
        )
        .unwrap();
        let p: Arc<dyn EmbeddingProvider> = Arc::new(LocalEmbedder::new(256).unwrap());
        VectorIndex::build(Arc::new(store), p).unwrap()
    }

    #[test]
    fn distance_branches() {
        let w = TimeWindow::parse("2024-03-01", "2024-03-31").unwrap();
        assert_eq!(temporal_distance(d("2024-03-15"), &w), 0.0);
        assert_eq!(temporal_distance(d("2024-02-20"), &w), 10.0);
        assert_eq!(temporal_distance(d("2025-03-31"), &w), 365.0);
    }

    #[test]
    fn decay_and_blend() {
        assert_eq!(time_score(0.0, 180.0), 1.0);
        assert!((time_score(180.0, 180.0) - 0.367_879_441_171_442_3).abs() < 1e-12);
        assert!((time_score(360.0, 180.0) - 0.135_335_283_236_612_7).abs() < 1e-12);
        assert!((combined_score(0.8, 1.0, 0.75) - 0.85).abs() < 1e-12);
        assert_eq!(combined_score(0.3, 0.9, 1.0), 0.3);
        assert_eq!(combined_score(0.3, 0.9, 0.0), 0.9);
    }

    #[test]
    fn params_validation() {
        assert!(RetrievalParams::default().validate().is_ok());
        let p = RetrievalParams { alpha: 1.5, ..Default::default() };
        assert!(p.validate().is_err());
        let p = RetrievalParams { tau_days: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = RetrievalParams { top_n: 0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = RetrievalParams { candidate_pool: 2, top_n: 4, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn later_musk_row_outranks_2024_rows() {
        let idx = richest_index();
        let w = TimeWindow::parse("2025-08-20", "2025-08-20").unwrap();
        let out = retrieve(&idx, "World’s Richest Person", &w, &RetrievalParams::default()).unwrap();
        assert_eq!(out.len(), 4);
        let june = out
            .iter()
            .position(|c| c.quad.timestamp == d("2024-06-08"))
            .expect("2024-06-08 row retrieved");
        for (i, c) in out.iter().enumerate() {
            if c.quad.timestamp.format("%Y").to_string() == "2024" && c.quad.timestamp != d("2024-06-08") {
                assert!(june < i);
            }
        }
    }

    #[test]
    fn alpha_one_matches_semantic_order() {
        let idx = richest_index();
        let w = TimeWindow::parse("2024-01-01", "2025-12-31").unwrap();
        let params = RetrievalParams { alpha: 1.0, top_n: 8, candidate_pool: 8, ..Default::default() };
        let out = retrieve(&idx, "Elon Musk", &w, &params).unwrap();
        let sem = idx.nearest("Elon Musk", 8).unwrap();
        let a: Vec<usize> = out.iter().map(|c| c.position).collect();
        let b: Vec<usize> = sem.iter().map(|h| h.position).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn single_item_store() {
        let store = QuadrupleStore::from_quadruples([
            Quadruple::parse("Acme", "acquired", "Widget Co", "2024-05-01").unwrap(),
        ])
        .unwrap();
        let p: Arc<dyn EmbeddingProvider> = Arc::new(LocalEmbedder::new(64).unwrap());
        let idx = VectorIndex::build(Arc::new(store), p).unwrap();
        let w = TimeWindow::parse("2024-06-01", "2024-06-30").unwrap();
        let params = RetrievalParams::default();
        let out = retrieve(&idx, "Acme", &w, &params).unwrap();
        assert_eq!(out.len(), 1);
        let sim = idx.nearest("Acme", 1).unwrap()[0].sim;
        let expect = 0.75 * sim + 0.25 * (-31.0f64 / 180.0).exp();
        assert!((out[0].score - expect).abs() < 1e-12);
    }

    #[test]
    fn multi_union_and_idempotence() {
        let idx = richest_index();
        let w = TimeWindow::parse("2025-09-10", "2025-09-10").unwrap();
        let params = RetrievalParams::default();
        let ents = vec!["World’s Richest Person".to_string(), "Oracle stock price".to_string()];
        let out = retrieve_multi(&idx, &ents, &w, &params).unwrap();
        assert!(out.candidates.iter().any(|c| c.quad.subject == "Oracle stock price"));
        for w2 in out.candidates.windows(2) {
            assert_ne!(rank_order(&w2[0], &w2[1]), Ordering::Greater);
        }

        let one = retrieve_multi(&idx, &ents[..1], &w, &params).unwrap();
        let twice = retrieve_multi(&idx, &[ents[0].clone(), ents[0].clone()], &w, &params).unwrap();
        assert_eq!(one, twice);

        let blank = retrieve_multi(&idx, &["   ".to_string(), ents[0].clone()], &w, &params).unwrap();
        assert_eq!(blank.skipped, vec!["   ".to_string()]);
        assert_eq!(blank.candidates, one.candidates);
    }

    #[test]
    fn pooled_cap_truncates() {
        let idx = richest_index();
        let w = TimeWindow::parse("2025-09-10", "2025-09-10").unwrap();
        let params = RetrievalParams { pooled_cap: Some(2), ..Default::default() };
        let ents = vec!["World’s Richest Person".to_string(), "Oracle stock price".to_string()];
        assert_eq!(retrieve_multi(&idx, &ents, &w, &params).unwrap().candidates.len(), 2);
    }

    #[test]
    fn empty_store_gives_empty_list() {
        let p: Arc<dyn EmbeddingProvider> = Arc::new(LocalEmbedder::new(64).unwrap());
        let idx = VectorIndex::build(Arc::new(QuadrupleStore::new()), p).unwrap();
        let w = TimeWindow::parse("2024-01-01", "2024-01-01").unwrap();
        assert!(retrieve(&idx, "x", &w, &RetrievalParams::default()).unwrap().is_empty());
    }
}
