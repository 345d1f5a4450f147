//! Build an event graph stage by stage and print its views.
//!
//!     cargo run --example event_graph

use chronos::eeg::EventGraph;
use chronos::store::{Quadruple, TimeWindow};

fn q(s: &str, r: &str, o: &str, t: &str) -> Quadruple {
    Quadruple::parse(s, r, o, t).expect("valid quadruple")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let retrieved = vec![
        q("World’s Richest Person", "held by", "Elon Musk", "2025-09-11"),
        q("World’s Richest Person", "held by", "Larry Ellison", "2025-09-10"),
        q("World’s Richest Person", "held by", "Elon Musk", "2024-06-08"),
    ];
    let history = vec![q("World’s Richest Person", "held by", "Bill Gates", "2014-03-01")];
    let augmentation = vec![q("Oracle stock price", "surged to", "USD 328", "2025-09-10")];

    let initial = EventGraph::build_initial(retrieved);
    println!("stage {:?}: {} nodes, temporal edges {:?}", initial.stage, initial.len(), initial.temporal_edges);

    let merged = initial.merge_history(history)?;
    println!("stage {:?}: {} nodes", merged.stage, merged.len());

    let graph = merged.augment(augmentation)?.link_entities();
    println!("stage {:?}: {} nodes", graph.stage, graph.len());
    for (entity, edges) in &graph.entity_edges {
        println!("  chain {entity:?}: {edges:?}");
    }

    // Calling a stage operation out of order is an error, not a panic.
    if let Err(e) = graph.clone().merge_history(Vec::new()) {
        println!("\n{e}");
    }

    let window = TimeWindow::parse("2025-09-01", "2025-09-30")?;
    let views = graph.views(&window)?;
    println!("\n{}", views.temporal_view);
    println!("\n{}", views.entity_views_text());

    let json = graph.serialize();
    assert_eq!(EventGraph::parse(&json)?, graph);
    println!("\nserialized graph: {} bytes", json.len());
    Ok(())
}
