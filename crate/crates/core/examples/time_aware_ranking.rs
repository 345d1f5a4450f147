//! Semantic ranking versus time-aware re-ranking for a dated question.
//!
//! Every "World's Richest Person" fact has nearly the same text, so cosine
//! similarity alone cannot tell them apart. The time score can.
//!
//!     cargo run --example time_aware_ranking

use std::sync::Arc;

use chronos::embedding::{LocalEmbedder, VectorIndex};
use chronos::llm::scripted::fixture_path;
use chronos::retrieval::{retrieve, retrieve_semantic, RetrievalParams, ScoredCandidate};
use chronos::store::{QuadrupleStore, TimeWindow};

fn show(title: &str, list: &[ScoredCandidate]) {
    println!("{title}");
    println!("  {:>6}  {:>5}  {:>6}  {:>6}  event", "sim", "delta", "time", "score");
    for c in list {
        println!(
            "  {:>6.4}  {:>5}  {:>6.4}  {:>6.4}  {}",
            c.sim, c.delta_days, c.time_score, c.score, c.quad
        );
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = Arc::new(QuadrupleStore::load(fixture_path("richest_store.jsonl"))?);
    let index = VectorIndex::build(store, Arc::new(LocalEmbedder::new(256)?))?;

    let entity = "World’s Richest Person";
    let window = TimeWindow::parse("2024-03-05", "2024-03-05")?;
    let params = RetrievalParams::default();

    show("semantic only:", &retrieve_semantic(&index, entity, &window, params.top_n, params.tau_days)?);
    println!();
    show(&format!("time-aware, window {window}:"), &retrieve(&index, entity, &window, &params)?);

    // alpha = 1 drops the time term from the score, yet equal scores still
    // break ties by distance; alpha = 0 ranks by date alone.
    for alpha in [1.0, 0.0] {
        let p = RetrievalParams { alpha, ..params };
        let top = &retrieve(&index, entity, &window, &p)?[0];
        println!("\nalpha {alpha}: top hit {}", top.quad);
    }
    Ok(())
}
