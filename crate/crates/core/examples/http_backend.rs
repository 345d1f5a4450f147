//! Ask one question through an OpenAI-compatible chat endpoint.
//!
//!     CHRONOS_API_KEY=... cargo run --example http_backend -- \
//!         http://localhost:8000/v1/chat/completions my-model "Who was ...?"
//!
//! With no arguments the defaults point at a local server; if nothing is
//! listening the example reports the connection error and exits.

use std::sync::Arc;
use std::time::Duration;

use chronos::embedding::{LocalEmbedder, VectorIndex};
use chronos::harness::{Engine, Method, RunConfig, Trace};
use chronos::llm::{scripted::fixture_path, Gateway, HttpBackend, HttpBackendConfig};
use chronos::store::{QuadrupleStore, TimeWindow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let defaults = HttpBackendConfig::default();
    let config = HttpBackendConfig {
        endpoint: args.next().unwrap_or(defaults.endpoint.clone()),
        model: args.next().unwrap_or(defaults.model.clone()),
        timeout: Duration::from_secs(30),
        attempts: 2,
        ..defaults
    };
    let question = args
        .next()
        .unwrap_or_else(|| "Who was the world’s richest person on August 20, 2025?".into());

    let store = Arc::new(QuadrupleStore::load(fixture_path("richest_store.jsonl"))?);
    let index = VectorIndex::build(store, Arc::new(LocalEmbedder::new(256)?))?;
    let knowledge = TimeWindow::parse("2024-01-01", "2025-10-31")?;
    println!("endpoint {} model {}", config.endpoint, config.model);
    let gateway = Gateway::new(Arc::new(HttpBackend::new(config)?), knowledge).with_max_in_flight(2);
    let engine = Engine::new(Arc::new(index), gateway);

    let mut trace = Trace::default();
    match engine.run(&question, &question, &RunConfig::new(Method::Chronos, knowledge), &mut trace) {
        Ok(answer) => println!("answer: {answer}"),
        Err(e) => println!("failed after {} exchange(s): {e}", trace.transcript.exchanges.len()),
    }
    if let Some(tokens) = trace.transcript.tokens() {
        println!("tokens used: {tokens}");
    }
    Ok(())
}
