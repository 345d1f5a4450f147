use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::QAItem;
use super::report::{ItemRecord, Report};
use super::scoring::exact_match;
use crate::eeg::{format_event_line, EventGraph, EventNode, Provenance, ViewBundle};
use crate::embedding::VectorIndex;
use crate::error::{Error, HarnessError};
use crate::llm::{Gateway, QueryAnalysis, Transcript};
use crate::retrieval::{retrieve_multi, retrieve_multi_semantic, RetrievalParams, ScoredCandidate};
use crate::store::TimeWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    VanillaRag,
    Chronos,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::VanillaRag => "vanilla_rag",
            Method::Chronos => "chronos",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().replace('-', "_").as_str() {
            "direct" => Ok(Method::Direct),
            "vanilla_rag" | "rag" => Ok(Method::VanillaRag),
            "chronos" => Ok(Method::Chronos),
            _ => Err(HarnessError::Config(format!(
                "unknown method {s:?} (expected direct, vanilla_rag or chronos)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    TimeAwareRetrieval,
    HistoryReconstruction,
    EventAugmentation,
    TemporalView,
    EntityView,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::TimeAwareRetrieval,
        Ablation::HistoryReconstruction,
        Ablation::EventAugmentation,
        Ablation::TemporalView,
        Ablation::EntityView,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::TimeAwareRetrieval => "time_aware_retrieval",
            Ablation::HistoryReconstruction => "history_reconstruction",
            Ablation::EventAugmentation => "event_augmentation",
            Ablation::TemporalView => "temporal_view",
            Ablation::EntityView => "entity_view",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ablation {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_lowercase().replace('-', "_");
        Ablation::ALL
            .into_iter()
            .find(|a| a.as_str() == key)
            .ok_or_else(|| {
                HarnessError::Config(format!(
                    "unknown ablation {s:?} (expected one of {})",
                    Ablation::ALL.map(Ablation::as_str).join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub ablations: BTreeSet<Ablation>,
    pub retrieval: RetrievalParams,
    pub knowledge_window: TimeWindow,
    /// Leave timings out of records so identical runs are byte-identical.
    pub deterministic: bool,
    /// Augmentation rounds; each is one generation pass plus at most one
    /// follow-up retrieval.
    pub augment_rounds: usize,
    /// Items evaluated concurrently.
    pub workers: usize,
}

impl RunConfig {
    pub fn new(method: Method, knowledge_window: TimeWindow) -> Self {
        RunConfig {
            method,
            ablations: BTreeSet::new(),
            retrieval: RetrievalParams::default(),
            knowledge_window,
            deterministic: false,
            augment_rounds: 1,
            workers: 1,
        }
    }

    pub fn with_ablation(mut self, a: Ablation) -> Self {
        self.ablations.insert(a);
        self
    }

    pub fn ablated(&self, a: Ablation) -> bool {
        self.ablations.contains(&a)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.retrieval
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if !self.ablations.is_empty() && self.method != Method::Chronos {
            return Err(HarnessError::Config(format!(
                "ablations apply only to the chronos method, not {}",
                self.method
            )));
        }
        if self.ablated(Ablation::TemporalView) && self.ablated(Ablation::EntityView) {
            return Err(HarnessError::Config(
                "temporal_view and entity_view cannot both be ablated".into(),
            ));
        }
        if self.workers == 0 {
            return Err(HarnessError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Short run label such as `chronos-entity_view`.
    pub fn label(&self) -> String {
        let mut s = self.method.to_string();
        for a in &self.ablations {
            s.push('-');
            s.push_str(a.as_str());
        }
        s
    }
}

/// The shared, read-only parts of a run.
#[derive(Clone)]
pub struct Engine {
    pub index: Arc<VectorIndex>,
    pub gateway: Gateway,
}

/// Everything one question produced on its way through the pipeline.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Trace {
    pub analysis: Option<QueryAnalysis>,
    pub retrieved: Vec<ScoredCandidate>,
    pub history_degraded: bool,
    pub follow_up: Option<String>,
    pub graph: Option<EventGraph>,
    pub views: Option<ViewBundle>,
    pub documents: Vec<String>,
    pub answer: Option<String>,
    pub transcript: Transcript,
}

impl Engine {
    pub fn new(index: Arc<VectorIndex>, gateway: Gateway) -> Self {
        Engine { index, gateway }
    }

    fn retrieve(
        &self,
        entities: &[String],
        window: &TimeWindow,
        config: &RunConfig,
    ) -> Result<Vec<ScoredCandidate>, Error> {
        let found = if config.ablated(Ablation::TimeAwareRetrieval) {
            retrieve_multi_semantic(&self.index, entities, window, &config.retrieval)?
        } else {
            retrieve_multi(&self.index, entities, window, &config.retrieval)?
        };
        Ok(found.candidates)
    }

    /// Runs the configured method on one question. `answer_text` is what the
    /// answering prompt sees (the question plus any options); `question` is
    /// used for analysis. On error, `trace` holds whatever was produced.
    pub fn run(
        &self,
        question: &str,
        answer_text: &str,
        config: &RunConfig,
        trace: &mut Trace,
    ) -> Result<String, Error> {
        let answer = match config.method {
            Method::Direct => self.gateway.direct_answer(answer_text, &mut trace.transcript)?,
            Method::VanillaRag => {
                let hits = self.index.nearest(question, config.retrieval.top_n)?;
                trace.documents = hits
                    .iter()
                    .enumerate()
                    .map(|(i, h)| {
                        format_event_line(&EventNode {
                            node_id: i,
                            quad: self.index.quad(h.position).clone(),
                            provenance: Provenance::Retrieved,
                        })
                    })
                    .collect();
                self.gateway
                    .rag_answer(answer_text, &trace.documents, &mut trace.transcript)?
            }
            Method::Chronos => self.run_chronos(question, answer_text, config, trace)?,
        };
        trace.answer = Some(answer.clone());
        Ok(answer)
    }

    fn run_chronos(
        &self,
        question: &str,
        answer_text: &str,
        config: &RunConfig,
        trace: &mut Trace,
    ) -> Result<String, Error> {
        let gw = &self.gateway;
        let analysis = gw.analyze_query(question, &mut trace.transcript)?;
        trace.analysis = Some(analysis.clone());
        let window = analysis.window;

        trace.retrieved = self.retrieve(&analysis.entities, &window, config)?;
        let mut graph = EventGraph::build_initial(trace.retrieved.iter().map(|c| c.quad.clone()));
        trace.graph = Some(graph.clone());

        let history = if config.ablated(Ablation::HistoryReconstruction) {
            Vec::new()
        } else {
            let h = gw.reconstruct_history(
                &analysis.time_agnostic_query,
                &window,
                &mut trace.transcript,
            )?;
            trace.history_degraded = h.degraded;
            h.quads
        };
        graph = graph.merge_history(history)?;
        trace.graph = Some(graph.clone());

        if !config.ablated(Ablation::EventAugmentation) {
            for _ in 0..config.augment_rounds {
                let aug = gw.augment_events(question, &window, &graph.summary(), &mut trace.transcript)?;
                let mut extra = aug.quads;
                if let Some(q) = &aug.follow_up {
                    let found = self.retrieve(std::slice::from_ref(q), &window, config)?;
                    extra.extend(found.into_iter().map(|c| c.quad));
                    trace.follow_up = Some(q.clone());
                }
                let before = graph.len();
                graph = graph.augment(extra)?;
                if aug.follow_up.is_none() || graph.len() == before {
                    break;
                }
            }
        }

        let graph = graph.link_entities();
        let mut views = graph.views(&window)?;
        trace.graph = Some(graph);
        if config.ablated(Ablation::TemporalView) {
            views.temporal_view.clear();
        }
        if config.ablated(Ablation::EntityView) {
            views.entity_views.clear();
        }
        trace.views = Some(views.clone());
        Ok(gw.answer(answer_text, &window, &views, &mut trace.transcript)?)
    }

    /// Answers and scores one item. Stage failures become an incorrect
    /// record carrying the error text.
    pub fn evaluate_item(&self, item: &QAItem, config: &RunConfig) -> (ItemRecord, Trace) {
        let started = Instant::now();
        let mut trace = Trace::default();
        let result = self.run(&item.question, &item.prompt_question(), config, &mut trace);
        let elapsed = started.elapsed().as_secs_f64() * 1000.0;
        let (prediction, error) = match result {
            Ok(a) => (a, None),
            Err(e) => {
                log::warn!("item {} failed: {e}", item.id);
                (String::new(), Some(e.to_string()))
            }
        };
        let record = ItemRecord {
            id: item.id.clone(),
            category: item.category,
            correct: error.is_none() && exact_match(&prediction, item),
            prediction,
            gold: item.gold.clone(),
            latency_ms: (!config.deterministic).then_some(elapsed),
            tokens: trace.transcript.tokens(),
            error,
        };
        (record, trace)
    }

    /// Evaluates every item on a pool of `config.workers` threads. Records
    /// come back in dataset order. With `dump_graphs`, each item's final
    /// graph is written to `<dir>/<id>.json`.
    pub fn evaluate(
        &self,
        name: &str,
        items: &[QAItem],
        config: &RunConfig,
        dump_graphs: Option<&Path>,
    ) -> Result<Report, Error> {
        config.validate()?;
        if let Some(dir) = dump_graphs {
            fs::create_dir_all(dir).map_err(|e| HarnessError::File {
                path: dir.to_path_buf(),
                message: e.to_string(),
            })?;
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let results: Vec<(ItemRecord, Trace)> = pool.install(|| {
            items
                .par_iter()
                .map(|item| self.evaluate_item(item, config))
                .collect()
        });
        let mut records = Vec::with_capacity(results.len());
        for (record, trace) in results {
            if let (Some(dir), Some(graph)) = (dump_graphs, &trace.graph) {
                let path = dir.join(format!("{}.json", sanitize(&record.id)));
                fs::write(&path, graph.serialize() + "\n").map_err(|e| HarnessError::File {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
            }
            records.push(record);
        }
        let snapshot = serde_json::to_value(config).expect("config serializes");
        Ok(Report::new(name, snapshot, records))
    }
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
