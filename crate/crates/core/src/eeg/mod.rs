//! Event evolution graphs.
//!
//! A graph is built in three stages:
//!
//! * **I** ([`EventGraph::build_initial`]): retrieved events on a single
//!   chronological path.
//! * **F** ([`EventGraph::merge_history`], [`EventGraph::augment`]):
//!   reconstructed historical events and augmentation events inserted on the
//!   same timeline.
//! * **A** ([`EventGraph::link_entities`]): one chronological chain per
//!   entity over the events naming it as subject or object.
//!
//! Node ids are assigned in insertion order. Chronological order is
//! `(timestamp, node_id)`, so among same-day events retrieved ones come
//! before historical ones, which come before augmented ones.

mod views;

pub use views::{format_event_line, parse_event_line, EventLine, ViewBundle};

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::store::{normalize_entity, QuadKey, Quadruple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Retrieved,
    Historical,
    Augmented,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Retrieved => "retrieved",
            Provenance::Historical => "historical",
            Provenance::Augmented => "augmented",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "retrieved" => Some(Provenance::Retrieved),
            "historical" => Some(Provenance::Historical),
            "augmented" => Some(Provenance::Augmented),
            _ => None,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    I,
    F,
    A,
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::I => "I",
            Stage::F => "F",
            Stage::A => "A",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventNode {
    pub node_id: usize,
    pub quad: Quadruple,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventGraph {
    pub nodes: Vec<EventNode>,
    pub temporal_edges: Vec<(usize, usize)>,
    /// Normalized entity -> consecutive pairs along its chain. Entities with
    /// a single event map to an empty list.
    pub entity_edges: BTreeMap<String, Vec<(usize, usize)>>,
    pub stage: Stage,
}

impl Default for EventGraph {
    fn default() -> Self {
        EventGraph {
            nodes: Vec::new(),
            temporal_edges: Vec::new(),
            entity_edges: BTreeMap::new(),
            stage: Stage::I,
        }
    }
}

impl EventGraph {
    /// Stage I: dedup, sort by `(timestamp, input order)`, one retrieved
    /// node per event, consecutive nodes joined by temporal edges.
    pub fn build_initial<I>(events: I) -> Self
    where
        I: IntoIterator<Item = Quadruple>,
    {
        let mut seen = HashSet::new();
        let mut unique: Vec<Quadruple> = events
            .into_iter()
            .filter(|q| seen.insert(q.key()))
            .collect();
        unique.sort_by_key(|q| q.timestamp);
        let mut g = EventGraph::default();
        for quad in unique {
            g.push(quad, Provenance::Retrieved);
        }
        g.rebuild_temporal_edges();
        g
    }

    /// Stage I -> F: inserts reconstructed history as `historical` nodes.
    pub fn merge_history<I>(mut self, hist: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = Quadruple>,
    {
        self.require(Stage::I, "merge_history")?;
        self.insert_all(hist, Provenance::Historical);
        self.stage = Stage::F;
        Ok(self)
    }

    /// Adds augmentation events. Stage stays F.
    pub fn augment<I>(mut self, extra: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = Quadruple>,
    {
        self.require(Stage::F, "augment")?;
        self.insert_all(extra, Provenance::Augmented);
        Ok(self)
    }

    /// Builds every entity chain and moves to stage A. Idempotent.
    pub fn link_entities(mut self) -> Self {
        let order = self.chronological();
        let mut chains: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for id in order {
            let q = &self.nodes[id].quad;
            let s = normalize_entity(&q.subject);
            let o = normalize_entity(&q.object);
            chains.entry(s.clone()).or_default().push(id);
            if o != s {
                chains.entry(o).or_default().push(id);
            }
        }
        self.entity_edges = chains
            .into_iter()
            .map(|(e, ids)| (e, ids.windows(2).map(|w| (w[0], w[1])).collect()))
            .collect();
        self.stage = Stage::A;
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &EventNode {
        &self.nodes[id]
    }

    pub fn contains(&self, quad: &Quadruple) -> bool {
        let key = quad.key();
        self.nodes.iter().any(|n| n.quad.key() == key)
    }

    /// Node ids sorted by `(timestamp, node_id)`.
    pub fn chronological(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.nodes.len()).collect();
        ids.sort_by_key(|&i| (self.nodes[i].quad.timestamp, i));
        ids
    }

    /// Node ids along the chain of `entity`, oldest first.
    pub fn entity_chain(&self, entity: &str) -> Vec<usize> {
        let e = normalize_entity(entity);
        match self.entity_edges.get(&e) {
            Some(edges) if !edges.is_empty() => {
                let mut ids = vec![edges[0].0];
                ids.extend(edges.iter().map(|&(_, b)| b));
                ids
            }
            Some(_) => self
                .nodes
                .iter()
                .filter(|n| n.quad.involves(&e))
                .map(|n| n.node_id)
                .take(1)
                .collect(),
            None => Vec::new(),
        }
    }

    /// Plain chronological listing of every node, used as the graph summary
    /// handed to the augmentation prompt.
    pub fn summary(&self) -> String {
        self.chronological()
            .into_iter()
            .map(|id| format_event_line(&self.nodes[id]))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn serialize(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    /// Parses a document produced by [`EventGraph::serialize`]. Errors name
    /// the JSON path that failed.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let g: EventGraph = serde_path_to_error::deserialize(de).map_err(|e| GraphError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        g.check_ids()?;
        Ok(g)
    }

    fn check_ids(&self) -> Result<(), GraphError> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.node_id != i {
                return Err(GraphError::Parse {
                    path: format!("nodes[{i}].node_id"),
                    message: format!("expected {i}, found {}", n.node_id),
                });
            }
        }
        let n = self.nodes.len();
        let check = |path: String, (a, b): (usize, usize)| {
            if a >= n || b >= n {
                Err(GraphError::Parse {
                    path,
                    message: format!("edge ({a}, {b}) references a missing node"),
                })
            } else {
                Ok(())
            }
        };
        for (i, &e) in self.temporal_edges.iter().enumerate() {
            check(format!("temporal_edges[{i}]"), e)?;
        }
        for (ent, edges) in &self.entity_edges {
            for (i, &e) in edges.iter().enumerate() {
                check(format!("entity_edges.{ent}[{i}]"), e)?;
            }
        }
        Ok(())
    }

    fn require(&self, stage: Stage, op: &'static str) -> Result<(), GraphError> {
        if self.stage != stage {
            return Err(GraphError::Stage {
                op,
                expected: stage.name(),
                actual: self.stage.name(),
            });
        }
        Ok(())
    }

    fn push(&mut self, quad: Quadruple, provenance: Provenance) {
        let node_id = self.nodes.len();
        self.nodes.push(EventNode {
            node_id,
            quad,
            provenance,
        });
    }

    fn insert_all<I>(&mut self, quads: I, provenance: Provenance)
    where
        I: IntoIterator<Item = Quadruple>,
    {
        let mut keys: HashSet<QuadKey> = self.nodes.iter().map(|n| n.quad.key()).collect();
        for q in quads {
            if keys.insert(q.key()) {
                self.push(q, provenance);
            }
        }
        self.rebuild_temporal_edges();
    }

    fn rebuild_temporal_edges(&mut self) {
        self.temporal_edges = self
            .chronological()
            .windows(2)
            .map(|w| (w[0], w[1]))
            .collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::QuadrupleStore;

    fn richest() -> Vec<Quadruple> {
        QuadrupleStore::from_reader(include_str!("../../fixtures/richest_store.jsonl").as_bytes())
            .unwrap()
            .items()
            .to_vec()
    }

    fn q(s: &str, r: &str, o: &str, t: &str) -> Quadruple {
        Quadruple::parse(s, r, o, t).unwrap()
    }

    fn full_graph() -> EventGraph {
        let all = richest();
        let richest: Vec<_> = all[..7].to_vec();
        EventGraph::build_initial(richest)
            .merge_history([q("World’s Richest Person", "held by", "Bill Gates", "2014-03-01")])
            .unwrap()
            .augment([all[7].clone()])
            .unwrap()
            .link_entities()
    }

    #[test]
    fn initial_path() {
        let mut rows = richest()[..7].to_vec();
        rows.reverse();
        let g = EventGraph::build_initial(rows);
        assert_eq!(g.len(), 7);
        assert_eq!(g.temporal_edges.len(), 6);
        assert_eq!(g.nodes[0].quad.timestamp.to_string(), "2024-01-01");
        assert_eq!(g.stage, Stage::I);
        assert!(EventGraph::build_initial(Vec::new()).temporal_edges.is_empty());
        let one = EventGraph::build_initial(richest()[..1].to_vec());
        assert_eq!((one.len(), one.temporal_edges.len()), (1, 0));
    }

    #[test]
    fn history_merge() {
        let g = EventGraph::build_initial(richest()[..7].to_vec());
        let gates = q("World’s Richest Person", "held by", "Bill Gates", "2014-03-01");
        let f = g.clone().merge_history([gates.clone()]).unwrap();
        assert_eq!(f.len(), 8);
        assert_eq!(f.temporal_edges.len(), 7);
        assert_eq!(f.chronological()[0], 7);
        assert_eq!(f.nodes[7].provenance, Provenance::Historical);
        assert_eq!(f.stage, Stage::F);

        let empty = g.clone().merge_history(Vec::new()).unwrap();
        assert_eq!(empty.nodes, g.nodes);
        assert_eq!(empty.stage, Stage::F);

        let dup = g.clone().merge_history([richest()[2].clone()]).unwrap();
        assert_eq!(dup.len(), 7);

        assert!(matches!(
            f.merge_history(Vec::new()),
            Err(GraphError::Stage { op: "merge_history", .. })
        ));
    }

    #[test]
    fn augmentation() {
        let f = EventGraph::build_initial(richest()[..7].to_vec())
            .merge_history(Vec::new())
            .unwrap();
        let a = f.clone().augment([richest()[7].clone()]).unwrap();
        assert_eq!(a.len(), 8);
        assert_eq!(a.stage, Stage::F);
        assert_eq!(f.clone().augment(Vec::new()).unwrap().nodes, f.nodes);
        assert_eq!(f.clone().augment(richest()[..3].to_vec()).unwrap().nodes, f.nodes);
        let i = EventGraph::build_initial(Vec::new());
        assert!(i.augment(Vec::new()).is_err());
    }

    #[test]
    fn entity_linking() {
        let g = full_graph();
        assert_eq!(g.stage, Stage::A);
        // Elon Musk appears in three rows of the fixture.
        let musk = &g.entity_edges["elon musk"];
        assert_eq!(musk.len(), 2);
        assert_eq!(g.entity_chain("Elon Musk").len(), 3);
        assert_eq!(g.entity_chain("world’s richest person").len(), 8);
        assert!(g.entity_edges["usd 328"].is_empty());
        assert_eq!(g.entity_chain("USD 328").len(), 1);
    }

    #[test]
    fn self_referential_event_counted_once() {
        let g = EventGraph::build_initial([
            q("Acme", "merged with", "Acme", "2024-01-01"),
            q("Acme", "renamed", "Acme Corp", "2024-02-01"),
        ])
        .link_entities();
        assert_eq!(g.entity_chain("acme"), vec![0, 1]);
        assert_eq!(g.entity_edges["acme"], vec![(0, 1)]);
    }

    #[test]
    fn same_day_ties_follow_insertion_order() {
        let g = EventGraph::build_initial([q("A", "r", "B", "2024-05-01")])
            .merge_history([q("A", "r", "C", "2024-05-01")])
            .unwrap()
            .augment([q("A", "r", "D", "2024-05-01")])
            .unwrap()
            .link_entities();
        assert_eq!(g.temporal_edges, vec![(0, 1), (1, 2)]);
        assert_eq!(g.entity_edges["a"], vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn json_round_trip() {
        let g = full_graph();
        assert_eq!(EventGraph::parse(&g.serialize()).unwrap(), g);
        let empty = EventGraph::default();
        let text = empty.serialize();
        assert!(text.contains("\"nodes\": []"));
        assert_eq!(EventGraph::parse(&text).unwrap(), empty);
    }

    #[test]
    fn truncated_document_is_an_error() {
        let text = full_graph().serialize();
        let cut = &text[..text.len() / 2];
        assert!(matches!(EventGraph::parse(cut), Err(GraphError::Parse { .. })));
        let bad_stage = text.replace("\"stage\": \"A\"", "\"stage\": \"Z\"");
        assert!(EventGraph::parse(&bad_stage).is_err());
    }
}
