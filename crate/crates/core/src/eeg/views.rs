use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{EventGraph, EventNode, Provenance, Stage};
use crate::error::GraphError;
use crate::store::{normalize_entity, parse_date, TimeWindow};

const SEP: &str = " — ";

/// `[YYYY-MM-DD] subject — relation — object (provenance)`
pub fn format_event_line(node: &EventNode) -> String {
    let q = &node.quad;
    format!(
        "[{}] {}{SEP}{}{SEP}{} ({})",
        q.timestamp, q.subject, q.relation, q.object, node.provenance
    )
}

/// One parsed view line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLine {
    pub date: NaiveDate,
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub provenance: Provenance,
}

/// Inverse of [`format_event_line`]; `None` for anything else.
pub fn parse_event_line(line: &str) -> Option<EventLine> {
    let line = line.trim();
    let rest = line.strip_prefix('[')?;
    let (date, rest) = rest.split_once("] ")?;
    let date = parse_date(date).ok()?;
    let open = rest.rfind(" (")?;
    let provenance = Provenance::parse(rest[open + 2..].strip_suffix(')')?)?;
    let mut parts = rest[..open].splitn(3, SEP);
    let subject = parts.next()?.to_string();
    let relation = parts.next()?.to_string();
    let object = parts.next()?.to_string();
    Some(EventLine {
        date,
        subject,
        relation,
        object,
        provenance,
    })
}

/// Serialized views handed to the answering prompt.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViewBundle {
    pub temporal_view: String,
    /// Normalized entity -> its view text.
    pub entity_views: BTreeMap<String, String>,
}

impl ViewBundle {
    /// All entity views separated by blank lines.
    pub fn entity_views_text(&self) -> String {
        self.entity_views
            .values()
            .cloned()
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

impl EventGraph {
    fn require_linked(&self, op: &'static str) -> Result<(), GraphError> {
        if self.stage != Stage::A {
            return Err(GraphError::Stage {
                op,
                expected: "A",
                actual: match self.stage {
                    Stage::I => "I",
                    Stage::F => "F",
                    Stage::A => "A",
                },
            });
        }
        Ok(())
    }

    /// Header line followed by one line per node dated inside `window`,
    /// in chronological order.
    pub fn temporal_view(&self, window: &TimeWindow) -> Result<String, GraphError> {
        self.require_linked("temporal_view")?;
        let mut out = format!("Temporal view ({window}):");
        for id in self.chronological() {
            let node = &self.nodes[id];
            if window.contains(node.quad.timestamp) {
                out.push('\n');
                out.push_str(&format_event_line(node));
            }
        }
        Ok(out)
    }

    /// One view per entity, lines in chain order under an `Entity:` header.
    pub fn entity_views(&self) -> Result<BTreeMap<String, String>, GraphError> {
        self.require_linked("entity_views")?;
        let mut views = BTreeMap::new();
        for entity in self.entity_edges.keys() {
            let chain = self.entity_chain(entity);
            let Some(&first) = chain.first() else { continue };
            let q = &self.nodes[first].quad;
            let label = if normalize_entity(&q.subject) == *entity {
                &q.subject
            } else {
                &q.object
            };
            let mut text = format!("Entity: {label}");
            for id in chain {
                text.push('\n');
                text.push_str(&format_event_line(&self.nodes[id]));
            }
            views.insert(entity.clone(), text);
        }
        Ok(views)
    }

    pub fn views(&self, window: &TimeWindow) -> Result<ViewBundle, GraphError> {
        Ok(ViewBundle {
            temporal_view: self.temporal_view(window)?,
            entity_views: self.entity_views()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{Quadruple, QuadrupleStore};

    fn full_graph() -> EventGraph {
        let store = QuadrupleStore::from_reader(
            include_str!("../../fixtures/richest_store.jsonl").as_bytes(),
        )
        .unwrap();
        let all = store.items().to_vec();
        EventGraph::build_initial(all[..7].to_vec())
            .merge_history([Quadruple::parse(
                "World’s Richest Person",
                "held by",
                "Bill Gates",
                "2014-03-01",
            )
            .unwrap()])
            .unwrap()
            .augment([all[7].clone()])
            .unwrap()
            .link_entities()
    }

    #[test]
    fn line_round_trip() {
        let g = full_graph();
        for n in &g.nodes {
            let line = format_event_line(n);
            let back = parse_event_line(&line).unwrap();
            assert_eq!(back.date, n.quad.timestamp);
            assert_eq!(back.subject, n.quad.subject);
            assert_eq!(back.object, n.quad.object);
            assert_eq!(back.provenance, n.provenance);
        }
        assert_eq!(
            format_event_line(&g.nodes[7]),
            "[2014-03-01] World’s Richest Person — held by — Bill Gates (historical)"
        );
        assert!(parse_event_line("Temporal view (x):").is_none());
    }

    #[test]
    fn temporal_view_window() {
        let g = full_graph();
        let w = TimeWindow::parse("2025-09-10", "2025-09-11").unwrap();
        let view = g.temporal_view(&w).unwrap();
        let lines: Vec<_> = view.lines().skip(1).collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("Larry Ellison"));
        assert!(lines[1].contains("Oracle stock price"));
        assert!(lines[2].contains("Elon Musk"));

        let none = g
            .temporal_view(&TimeWindow::parse("2030-01-01", "2030-01-01").unwrap())
            .unwrap();
        assert_eq!(none.lines().count(), 1);

        let all = g
            .temporal_view(&TimeWindow::parse("2000-01-01", "2030-01-01").unwrap())
            .unwrap();
        assert_eq!(all.lines().count() - 1, g.len());
    }

    #[test]
    fn entity_view_contents() {
        let g = full_graph();
        let views = g.entity_views().unwrap();
        let richest = &views["world’s richest person"];
        let lines: Vec<_> = richest.lines().collect();
        assert_eq!(lines[0], "Entity: World’s Richest Person");
        // Bill Gates (history) plus the seven fixture transitions.
        assert_eq!(lines.len(), 1 + 8);
        let dates: Vec<_> = lines[1..].iter().map(|l| parse_event_line(l).unwrap().date).collect();
        assert!(dates.windows(2).all(|w| w[0] <= w[1]));

        assert_eq!(views["usd 328"].lines().count(), 2);
        let empty = EventGraph::default().link_entities();
        assert!(empty.entity_views().unwrap().is_empty());
    }

    #[test]
    fn views_require_stage_a() {
        let g = EventGraph::build_initial(Vec::new());
        assert!(g.entity_views().is_err());
        assert!(g
            .temporal_view(&TimeWindow::parse("2024-01-01", "2024-01-01").unwrap())
            .is_err());
    }
}
