use std::collections::BTreeSet;
use std::sync::Arc;

use chronos::eeg::{EventGraph, Provenance, Stage};
use chronos::embedding::{LocalEmbedder, VectorIndex};
use chronos::error::LlmError;
use chronos::harness::{load_dataset, Ablation, Category, Engine, Method, QAItem, RunConfig, Trace};
use chronos::llm::{scripted::fixture_path, Completion, Gateway, LlmBackend, ScriptedBackend};
use chronos::store::{QuadrupleStore, TimeWindow};

fn kw() -> TimeWindow {
    TimeWindow::parse("2024-01-01", "2025-10-31").unwrap()
}

fn scripted(lexicon: &str, history: &str) -> ScriptedBackend {
    ScriptedBackend::from_files(
        fixture_path(lexicon),
        fixture_path(history),
        Some(&fixture_path("commonsense.jsonl")),
    )
    .unwrap()
}

fn index(store: &str) -> Arc<VectorIndex> {
    let store = Arc::new(QuadrupleStore::load(fixture_path(store)).unwrap());
    Arc::new(VectorIndex::build(store, Arc::new(LocalEmbedder::new(256).unwrap())).unwrap())
}

fn richest_with(backend: Arc<dyn LlmBackend>) -> Engine {
    Engine::new(index("richest_store.jsonl"), Gateway::new(backend, kw()))
}

fn richest() -> Engine {
    richest_with(Arc::new(scripted("richest_lexicon.txt", "richest_history.jsonl")))
}

fn richest_items() -> Vec<QAItem> {
    load_dataset(fixture_path("richest_questions.jsonl")).unwrap()
}

fn det(method: Method) -> RunConfig {
    let mut cfg = RunConfig::new(method, kw());
    cfg.deterministic = true;
    cfg
}

/// Fails every prompt of one template and forwards the rest.
struct FailTemplate {
    inner: ScriptedBackend,
    marker: &'static str,
}

impl LlmBackend for FailTemplate {
    fn kind(&self) -> &str {
        "failing"
    }

    fn complete(&self, prompt: &str) -> Result<Completion, LlmError> {
        if prompt.contains(self.marker) {
            return Err(LlmError::Backend("connection refused".into()));
        }
        self.inner.complete(prompt)
    }
}

/// Fails any prompt mentioning a keyword.
struct FailOn {
    inner: ScriptedBackend,
    keyword: &'static str,
}

impl LlmBackend for FailOn {
    fn kind(&self) -> &str {
        "failing"
    }

    fn complete(&self, prompt: &str) -> Result<Completion, LlmError> {
        if prompt.contains(self.keyword) {
            return Err(LlmError::Backend("boom".into()));
        }
        self.inner.complete(prompt)
    }
}

#[test]
fn richest_answers() {
    let r = richest().evaluate("t1", &richest_items(), &det(Method::Chronos), None).unwrap();
    let got: Vec<(&str, &str)> = r
        .records
        .iter()
        .map(|x| (x.id.as_str(), x.prediction.as_str()))
        .collect();
    assert_eq!(
        got,
        vec![
            ("rp-hist", "Bill Gates"),
            ("rp-c1", "Elon Musk"),
            ("rp-c2", "Elon Musk, Bernard Arnault, Jeff Bezos"),
            ("rp-c3", "Oracle"),
            ("rp-cs", "A"),
        ]
    );
    assert!(r.records.iter().all(|x| x.correct && x.error.is_none()));
    assert!(r.records.iter().all(|x| x.latency_ms.is_none()));
    assert_eq!(r.overall(), Some(100.0));
}

#[test]
fn c3_trace_shows_follow_up() {
    let items = richest_items();
    let c3 = items.iter().find(|i| i.id == "rp-c3").unwrap();
    let (rec, trace) = richest().evaluate_item(c3, &det(Method::Chronos));
    assert!(rec.correct);
    let follow = trace.follow_up.unwrap();
    assert!(follow.starts_with("Oracle"), "{follow}");
    let graph = trace.graph.unwrap();
    assert_eq!(graph.stage, Stage::A);
    assert!(graph
        .nodes
        .iter()
        .any(|n| n.quad.subject.contains("Oracle") && n.provenance == Provenance::Augmented));
    // P1, P2, P3, P4.
    assert_eq!(trace.transcript.exchanges.len(), 4);
}

#[test]
fn ablations_on_richest() {
    let items = richest_items();
    let wrong = |cfg: &RunConfig| -> BTreeSet<String> {
        richest()
            .evaluate("x", &items, cfg, None)
            .unwrap()
            .records
            .into_iter()
            .filter(|r| !r.correct)
            .map(|r| r.id)
            .collect()
    };
    let set = |ids: &[&str]| ids.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
    let chronos = |a| det(Method::Chronos).with_ablation(a);
    assert_eq!(wrong(&chronos(Ablation::TimeAwareRetrieval)), set(&["rp-c1", "rp-c3"]));
    assert_eq!(wrong(&chronos(Ablation::HistoryReconstruction)), set(&["rp-hist"]));
    assert_eq!(wrong(&chronos(Ablation::EventAugmentation)), set(&["rp-c3"]));
    assert_eq!(wrong(&chronos(Ablation::EntityView)), set(&["rp-c1", "rp-c3"]));
    assert_eq!(wrong(&det(Method::Direct)), set(&["rp-c1", "rp-c2", "rp-c3"]));
    assert_eq!(wrong(&det(Method::VanillaRag)), set(&["rp-hist", "rp-c1", "rp-c3"]));
}

fn retrieved_nodes(trace: &Trace) -> BTreeSet<String> {
    trace
        .graph
        .as_ref()
        .unwrap()
        .nodes
        .iter()
        .filter(|n| n.provenance == Provenance::Retrieved)
        .map(|n| n.quad.to_string())
        .collect()
}

#[test]
fn history_ablation_leaves_retrieved_nodes_alone() {
    let engine = richest();
    let full = det(Method::Chronos);
    let ablated = det(Method::Chronos).with_ablation(Ablation::HistoryReconstruction);
    for item in richest_items().iter().filter(|i| i.category != Category::Commonsense) {
        let (_, a) = engine.evaluate_item(item, &full);
        let (_, b) = engine.evaluate_item(item, &ablated);
        assert_eq!(retrieved_nodes(&a), retrieved_nodes(&b), "{}", item.id);
        assert!(b
            .graph
            .unwrap()
            .nodes
            .iter()
            .all(|n| n.provenance != Provenance::Historical));
    }
}

#[test]
fn reruns_are_byte_identical_and_order_stable() {
    let items = richest_items();
    let mut one = det(Method::Chronos);
    one.workers = 1;
    let mut many = det(Method::Chronos);
    many.workers = 8;
    let a = richest().evaluate("t1", &items, &many, None).unwrap();
    let b = richest().evaluate("t1", &items, &many, None).unwrap();
    let c = richest().evaluate("t1", &items, &one, None).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.records, c.records);
    let ids: Vec<&str> = a.records.iter().map(|r| r.id.as_str()).collect();
    let want: Vec<&str> = items.iter().map(|i| i.id.as_str()).collect();
    assert_eq!(ids, want);
}

#[test]
fn non_deterministic_runs_record_latency() {
    let cfg = RunConfig::new(Method::Chronos, kw());
    let r = richest().evaluate("t1", &richest_items(), &cfg, None).unwrap();
    assert!(r.records.iter().all(|x| x.latency_ms.is_some()));
}

#[test]
fn graph_dumps_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let items = richest_items();
    richest()
        .evaluate("t1", &items, &det(Method::Chronos), Some(dir.path()))
        .unwrap();
    for item in &items {
        let text = std::fs::read_to_string(dir.path().join(format!("{}.json", item.id))).unwrap();
        let graph = EventGraph::parse(&text).unwrap();
        assert_eq!(graph.serialize() + "\n", text);
        assert_eq!(graph.stage, Stage::A);
    }
}

#[test]
fn history_failure_degrades_instead_of_failing() {
    let backend = FailTemplate {
        inner: scripted("richest_lexicon.txt", "richest_history.jsonl"),
        marker: "[[template:P2]]",
    };
    let engine = richest_with(Arc::new(backend));
    let items = richest_items();
    let r = engine.evaluate("t1", &items, &det(Method::Chronos), None).unwrap();
    assert!(r.records.iter().all(|x| x.error.is_none()));
    let hist = r.records.iter().find(|x| x.id == "rp-hist").unwrap();
    assert!(!hist.correct);
    let c1 = items.iter().find(|i| i.id == "rp-c1").unwrap();
    let (rec, trace) = engine.evaluate_item(c1, &det(Method::Chronos));
    assert!(rec.correct);
    assert!(trace.history_degraded);
}

#[test]
fn one_failing_item_does_not_stop_the_run() {
    let backend = FailOn {
        inner: scripted("richest_lexicon.txt", "richest_history.jsonl"),
        keyword: "brightest star",
    };
    let r = richest_with(Arc::new(backend))
        .evaluate("t1", &richest_items(), &det(Method::Chronos), None)
        .unwrap();
    assert_eq!(r.records.len(), 5);
    let cs = r.records.iter().find(|x| x.id == "rp-cs").unwrap();
    assert!(!cs.correct);
    assert!(cs.error.as_deref().unwrap().contains("boom"));
    assert_eq!(r.records.iter().filter(|x| x.correct).count(), 4);
}

#[test]
fn empty_dataset_gives_empty_report() {
    let r = richest().evaluate("none", &[], &det(Method::Chronos), None).unwrap();
    assert!(r.records.is_empty());
    assert!(r.accuracy.is_empty());
    assert_eq!(r.overall(), None);
}

#[test]
fn invalid_run_configs_are_rejected() {
    let items = richest_items();
    let mut zero = det(Method::Chronos);
    zero.retrieval.top_n = 0;
    assert!(richest().evaluate("x", &items, &zero, None).is_err());
    let both = det(Method::Chronos)
        .with_ablation(Ablation::TemporalView)
        .with_ablation(Ablation::EntityView);
    assert!(richest().evaluate("x", &items, &both, None).is_err());
    let direct = det(Method::Direct).with_ablation(Ablation::EntityView);
    assert!(richest().evaluate("x", &items, &direct, None).is_err());
}

#[test]
fn rag_documents_are_event_lines() {
    let items = richest_items();
    let (_, trace) = richest().evaluate_item(&items[1], &det(Method::VanillaRag));
    assert_eq!(trace.documents.len(), 4);
    for d in &trace.documents {
        let line = chronos::eeg::parse_event_line(d).unwrap();
        assert_eq!(line.provenance, Provenance::Retrieved);
    }
}
