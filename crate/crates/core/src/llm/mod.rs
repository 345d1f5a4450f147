//! Prompt rendering, backend calls and response parsing for every model
//! stage of the pipeline.

pub mod dates;
pub mod http;
pub mod parse;
pub mod scripted;
pub mod templates;

use std::sync::{Arc, Condvar, Mutex};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::eeg::ViewBundle;
use crate::error::LlmError;
use crate::store::{Quadruple, TimeWindow};

pub use http::{HttpBackend, HttpBackendConfig};
pub use parse::{extract_answer, parse_analysis, parse_quad_lines, QueryAnalysis, ANSWER_MARKER};
pub use scripted::ScriptedBackend;
pub use templates::{PromptTemplate, TemplateId, TemplateSet, PLACEHOLDERS};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl Usage {
    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub usage: Option<Usage>,
}

impl Completion {
    pub fn text(text: impl Into<String>) -> Self {
        Completion {
            text: text.into(),
            usage: None,
        }
    }
}

/// Anything that turns a rendered prompt into text. Implementations must be
/// deterministic for a fixed prompt (temperature 0).
pub trait LlmBackend: Send + Sync {
    /// `"http"` or `"scripted"`.
    fn kind(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<Completion, LlmError>;
}

/// One prompt/response pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub template: String,
    pub prompt: String,
    pub response: String,
    pub usage: Option<Usage>,
}

/// Every exchange made while answering one question, in call order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub exchanges: Vec<Exchange>,
}

impl Transcript {
    /// Sum of reported token usage. `None` if no call reported usage.
    pub fn tokens(&self) -> Option<u64> {
        self.exchanges
            .iter()
            .filter_map(|e| e.usage.map(|u| u.total()))
            .reduce(|a, b| a + b)
    }
}

/// Counting semaphore bounding concurrent backend calls.
#[derive(Debug)]
struct InFlight {
    cap: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn new(cap: usize) -> Self {
        InFlight {
            cap: cap.max(1),
            used: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut used = self.used.lock().unwrap_or_else(|e| e.into_inner());
            while *used >= self.cap {
                used = self.freed.wait(used).unwrap_or_else(|e| e.into_inner());
            }
            *used += 1;
        }
        struct Release<'a>(&'a InFlight);
        impl Drop for Release<'_> {
            fn drop(&mut self) {
                *self.0.used.lock().unwrap_or_else(|e| e.into_inner()) -= 1;
                self.0.freed.notify_one();
            }
        }
        let _release = Release(self);
        f()
    }
}

/// History reconstruction output. `degraded` is set when the backend failed
/// and the pipeline continued without history.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HistoryResult {
    pub quads: Vec<Quadruple>,
    pub degraded: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Augmentation {
    pub quads: Vec<Quadruple>,
    pub follow_up: Option<String>,
    pub degraded: bool,
}

const REPROMPT: &str = "\n\nYour previous reply could not be used";

/// Renders templates, calls the backend and parses replies.
#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn LlmBackend>,
    templates: TemplateSet,
    knowledge_window: TimeWindow,
    reference_date: NaiveDate,
    limiter: Arc<InFlight>,
}

impl Gateway {
    /// The reference date (used for relative expressions) defaults to the
    /// end of the knowledge window.
    pub fn new(backend: Arc<dyn LlmBackend>, knowledge_window: TimeWindow) -> Self {
        Gateway {
            backend,
            templates: TemplateSet::builtin(),
            reference_date: knowledge_window.end,
            knowledge_window,
            limiter: Arc::new(InFlight::new(usize::MAX)),
        }
    }

    pub fn with_templates(mut self, templates: TemplateSet) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_reference_date(mut self, date: NaiveDate) -> Self {
        self.reference_date = date;
        self
    }

    /// Caps concurrent backend calls across every clone of this gateway.
    pub fn with_max_in_flight(mut self, cap: usize) -> Self {
        self.limiter = Arc::new(InFlight::new(cap));
        self
    }

    pub fn backend(&self) -> &dyn LlmBackend {
        self.backend.as_ref()
    }

    pub fn knowledge_window(&self) -> &TimeWindow {
        &self.knowledge_window
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    fn call(
        &self,
        id: TemplateId,
        prompt: &str,
        transcript: &mut Transcript,
    ) -> Result<String, LlmError> {
        let completion = self.limiter.run(|| self.backend.complete(prompt))?;
        transcript.exchanges.push(Exchange {
            template: id.to_string(),
            prompt: prompt.to_string(),
            response: completion.text.clone(),
            usage: completion.usage,
        });
        Ok(completion.text)
    }

    /// Calls once, and once more with a correction note if `parse` rejects
    /// the reply.
    fn call_parsed<T>(
        &self,
        id: TemplateId,
        prompt: &str,
        transcript: &mut Transcript,
        stage: &'static str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, LlmError> {
        let first = self.call(id, prompt, transcript)?;
        let message = match parse(&first) {
            Ok(v) => return Ok(v),
            Err(m) => m,
        };
        log::warn!("{stage}: re-prompting after unusable reply ({message})");
        let retry = format!("{prompt}{REPROMPT} ({message}). Follow the reply format exactly.");
        let second = self.call(id, &retry, transcript)?;
        parse(&second).map_err(|message| LlmError::Unparseable {
            stage,
            message,
            raw: second,
        })
    }

    /// Entities, time-agnostic query and window for a raw question.
    pub fn analyze_query(
        &self,
        q_raw: &str,
        transcript: &mut Transcript,
    ) -> Result<QueryAnalysis, LlmError> {
        if q_raw.trim().is_empty() {
            return Err(LlmError::EmptyQuery);
        }
        let window = format!(
            "Reference date: {}\nDefault window: {}",
            self.reference_date, self.knowledge_window
        );
        let prompt = self
            .templates
            .render(TemplateId::P1, &[("question", q_raw), ("window", &window)])?;
        self.call_parsed(TemplateId::P1, &prompt, transcript, "query analysis", |text| {
            parse_analysis(text, q_raw, &self.knowledge_window)
        })
    }

    /// Historical quadruples recalled by the model. Backend failures yield an
    /// empty, degraded result rather than an error.
    pub fn reconstruct_history(
        &self,
        q0: &str,
        window: &TimeWindow,
        transcript: &mut Transcript,
    ) -> Result<HistoryResult, LlmError> {
        let w = window.to_string();
        let prompt = self
            .templates
            .render(TemplateId::P2, &[("question", q0), ("window", &w)])?;
        match self.call(TemplateId::P2, &prompt, transcript) {
            Ok(text) => Ok(HistoryResult {
                quads: parse_quad_lines(&text).quads,
                degraded: false,
            }),
            Err(LlmError::Backend(e)) => {
                log::warn!("history reconstruction degraded: {e}");
                Ok(HistoryResult {
                    quads: Vec::new(),
                    degraded: true,
                })
            }
            Err(e) => Err(e),
        }
    }

    /// Extra events and an optional follow-up query for the graph so far.
    pub fn augment_events(
        &self,
        q_raw: &str,
        window: &TimeWindow,
        graph_summary: &str,
        transcript: &mut Transcript,
    ) -> Result<Augmentation, LlmError> {
        let w = window.to_string();
        let prompt = self.templates.render(
            TemplateId::P3,
            &[
                ("question", q_raw),
                ("window", &w),
                ("graph_summary", graph_summary),
            ],
        )?;
        match self.call(TemplateId::P3, &prompt, transcript) {
            Ok(text) => {
                let parsed = parse_quad_lines(&text);
                Ok(Augmentation {
                    quads: parsed.quads,
                    follow_up: parsed.follow_up,
                    degraded: false,
                })
            }
            Err(LlmError::Backend(e)) => {
                log::warn!("event augmentation degraded: {e}");
                Ok(Augmentation {
                    degraded: true,
                    ..Augmentation::default()
                })
            }
            Err(e) => Err(e),
        }
    }

    /// Final answer from the temporal view followed by the entity views.
    pub fn answer(
        &self,
        q_raw: &str,
        window: &TimeWindow,
        views: &ViewBundle,
        transcript: &mut Transcript,
    ) -> Result<String, LlmError> {
        let w = window.to_string();
        let entity_views = views.entity_views_text();
        let prompt = self.templates.render(
            TemplateId::P4,
            &[
                ("question", q_raw),
                ("window", &w),
                ("temporal_view", &views.temporal_view),
                ("entity_views", &entity_views),
            ],
        )?;
        self.answer_call(TemplateId::P4, &prompt, transcript)
    }

    /// Closed-book answer. The window slot carries the knowledge window so
    /// the model can refuse questions beyond it.
    pub fn direct_answer(
        &self,
        q_raw: &str,
        transcript: &mut Transcript,
    ) -> Result<String, LlmError> {
        let w = self.knowledge_window.to_string();
        let prompt = self
            .templates
            .render(TemplateId::Direct, &[("question", q_raw), ("window", &w)])?;
        self.answer_call(TemplateId::Direct, &prompt, transcript)
    }

    /// Answer from retrieved documents, one per line.
    pub fn rag_answer(
        &self,
        q_raw: &str,
        documents: &[String],
        transcript: &mut Transcript,
    ) -> Result<String, LlmError> {
        let docs = documents.join("\n");
        let prompt = self
            .templates
            .render(TemplateId::Rag, &[("question", q_raw), ("documents", &docs)])?;
        self.answer_call(TemplateId::Rag, &prompt, transcript)
    }

    fn answer_call(
        &self,
        id: TemplateId,
        prompt: &str,
        transcript: &mut Transcript,
    ) -> Result<String, LlmError> {
        self.call_parsed(id, prompt, transcript, "answer", |text| {
            extract_answer(text).ok_or_else(|| format!("no `{ANSWER_MARKER}` line"))
        })
    }
}
