//! Load a quadruple store, look facts up by entity and by date, and write it
//! back out in canonical form.
//!
//!     cargo run --example store_ingest

use chronos::llm::scripted::fixture_path;
use chronos::store::{Quadruple, QuadrupleStore, TimeWindow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut store = QuadrupleStore::load(fixture_path("extended_store.jsonl"))?;
    println!("{} quadruples, {} entities", store.len(), store.entities().count());

    println!("\nUK Prime Minister:");
    for q in store.events_for_entity("uk prime minister") {
        println!("  {q}");
    }

    let summer = TimeWindow::parse("2024-06-01", "2024-08-31")?;
    println!("\nin {summer}:");
    for q in store.events_in_window(&summer) {
        println!("  {q}");
    }

    // Duplicates are detected on normalized text, so this is a no-op.
    let dup = Quadruple::parse("uk  PRIME minister", "held by", "keir starmer", "2024-07-05")?;
    println!("\ninserted duplicate? {}", store.insert(dup)?);

    let fresh = Quadruple::parse("UK Prime Minister", "held by", "Keir Starmer", "2025-01-01")?;
    println!("inserted new fact? {}", store.insert(fresh)?);

    // Malformed input is rejected with the offending line number.
    let bad = "{\"subject\":\"x\",\"relation\":\"y\",\"object\":\"z\",\"timestamp\":\"2024-02-30\"}\n";
    match QuadrupleStore::from_reader(bad.as_bytes()) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }

    let out = std::env::temp_dir().join("chronos_store_example.jsonl");
    store.save(&out)?;
    println!("\nsaved to {}", out.display());
    Ok(())
}
