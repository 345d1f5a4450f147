//! Every method and single-component ablation on the extended fixture,
//! printed as one comparison table.
//!
//!     cargo run --example ablation_study

use std::sync::Arc;

use chronos::embedding::{LocalEmbedder, VectorIndex};
use chronos::harness::{aggregate, load_dataset, Ablation, Engine, Method, RunConfig};
use chronos::llm::{scripted::fixture_path, Gateway, ScriptedBackend};
use chronos::store::{QuadrupleStore, TimeWindow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = Arc::new(QuadrupleStore::load(fixture_path("extended_store.jsonl"))?);
    let index = VectorIndex::build(store, Arc::new(LocalEmbedder::new(256)?))?;
    let backend = ScriptedBackend::from_files(
        fixture_path("extended_lexicon.txt"),
        fixture_path("extended_history.jsonl"),
        Some(&fixture_path("commonsense.jsonl")),
    )?;
    let knowledge = TimeWindow::parse("2024-01-01", "2025-10-31")?;
    let engine = Engine::new(Arc::new(index), Gateway::new(Arc::new(backend), knowledge));
    let items = load_dataset(fixture_path("extended_questions.jsonl"))?;

    let mut runs = vec![RunConfig::new(Method::Direct, knowledge), RunConfig::new(Method::VanillaRag, knowledge)];
    runs.push(RunConfig::new(Method::Chronos, knowledge));
    runs.extend(Ablation::ALL.map(|a| RunConfig::new(Method::Chronos, knowledge).with_ablation(a)));

    let mut reports = Vec::new();
    for mut cfg in runs {
        cfg.deterministic = true;
        reports.push(engine.evaluate(&cfg.label(), &items, &cfg, None)?);
    }
    print!("{}", aggregate(&reports, true).to_text());
    Ok(())
}
