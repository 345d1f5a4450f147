//! The full pipeline on the richest-person fixture with the deterministic scripted
//! model, printing each stage of one question and then scoring all five.
//!
//!     cargo run --example scripted_pipeline

use std::sync::Arc;

use chronos::embedding::{LocalEmbedder, VectorIndex};
use chronos::harness::{aggregate, load_dataset, Engine, Method, RunConfig, Trace};
use chronos::llm::{scripted::fixture_path, Gateway, ScriptedBackend};
use chronos::store::{QuadrupleStore, TimeWindow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = Arc::new(QuadrupleStore::load(fixture_path("richest_store.jsonl"))?);
    let index = VectorIndex::build(store, Arc::new(LocalEmbedder::new(256)?))?;
    let backend = ScriptedBackend::from_files(
        fixture_path("richest_lexicon.txt"),
        fixture_path("richest_history.jsonl"),
        Some(&fixture_path("commonsense.jsonl")),
    )?;
    let knowledge = TimeWindow::parse("2024-01-01", "2025-10-31")?;
    let engine = Engine::new(Arc::new(index), Gateway::new(Arc::new(backend), knowledge));
    let mut cfg = RunConfig::new(Method::Chronos, knowledge);
    cfg.deterministic = true;

    let question = "Which company’s stock surge led to Elon Musk losing his position as the world’s richest person on September 10, 2025?";
    let mut trace = Trace::default();
    let answer = engine.run(question, question, &cfg, &mut trace)?;

    let a = trace.analysis.as_ref().expect("analysis ran");
    println!("entities {:?}, window {}", a.entities, a.window);
    println!("retrieved {} events", trace.retrieved.len());
    println!("follow-up: {:?}", trace.follow_up);
    if let Some(views) = &trace.views {
        println!("\n{}\n\n{}", views.temporal_view, views.entity_views_text());
    }
    println!("\nanswer: {answer}  ({} model calls)", trace.transcript.exchanges.len());

    let items = load_dataset(fixture_path("richest_questions.jsonl"))?;
    let report = engine.evaluate("chronos", &items, &cfg, None)?;
    println!();
    for r in &report.records {
        println!("{:<8} {:<5} {}", r.id, r.correct, r.prediction);
    }
    print!("\n{}", aggregate(&[report], false).to_text());
    Ok(())
}
