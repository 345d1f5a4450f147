//! Prompt templates with `{{placeholder}}` slots.
//!
//! Every rendered prompt starts with a marker line `[[template:<ID>]]` so
//! that backends (the scripted one in particular) can tell which stage
//! produced it. Bodies are split into `## Section` blocks; the scripted
//! backend reads the `Question`, `Window`, `Graph`, `Temporal view`,
//! `Entity views` and `Documents` sections by name, so replacement templates
//! should keep those headers.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::LlmError;

/// Placeholders a template body may reference.
pub const PLACEHOLDERS: &[&str] = &[
    "question",
    "window",
    "temporal_view",
    "entity_views",
    "graph_summary",
    "documents",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateId {
    /// Query analysis.
    P1,
    /// History reconstruction.
    P2,
    /// Event augmentation.
    P3,
    /// Final answer from multi-perspective views.
    P4,
    /// Bare question, no external knowledge.
    Direct,
    /// Question plus retrieved documents.
    Rag,
}

impl TemplateId {
    pub const ALL: [TemplateId; 6] = [
        TemplateId::P1,
        TemplateId::P2,
        TemplateId::P3,
        TemplateId::P4,
        TemplateId::Direct,
        TemplateId::Rag,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::P1 => "P1",
            TemplateId::P2 => "P2",
            TemplateId::P3 => "P3",
            TemplateId::P4 => "P4",
            TemplateId::Direct => "DIRECT",
            TemplateId::Rag => "RAG",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
    }

    /// File name looked up under `prompts.dir`.
    pub fn file_name(self) -> String {
        format!("{}.txt", self.as_str())
    }

    /// The marker line that opens every prompt rendered from this template.
    pub fn marker(self) -> String {
        format!("[[template:{}]]", self.as_str())
    }

    /// Reads the template id back from a rendered prompt.
    pub fn from_prompt(prompt: &str) -> Option<Self> {
        let first = prompt.lines().next()?.trim();
        let id = first.strip_prefix("[[template:")?.strip_suffix("]]")?;
        Self::parse(id)
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn placeholder_re() -> Regex {
    Regex::new(r"\{\{\s*([A-Za-z0-9_]*)\s*\}\}").expect("valid regex")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    body: String,
}

impl PromptTemplate {
    /// Validates that every `{{...}}` in `body` is a declared placeholder.
    pub fn new(id: TemplateId, body: impl Into<String>) -> Result<Self, LlmError> {
        let body = body.into();
        let re = placeholder_re();
        for cap in re.captures_iter(&body) {
            let name = &cap[1];
            if !PLACEHOLDERS.contains(&name) {
                return Err(LlmError::Template {
                    id: id.to_string(),
                    message: format!("undeclared placeholder {{{{{name}}}}}"),
                });
            }
        }
        let stray = re.replace_all(&body, "");
        if stray.contains("{{") || stray.contains("}}") {
            return Err(LlmError::Template {
                id: id.to_string(),
                message: "unbalanced placeholder braces".into(),
            });
        }
        Ok(PromptTemplate { id, body })
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    /// Placeholders referenced by the body, in order of first use.
    pub fn placeholders(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for cap in placeholder_re().captures_iter(&self.body) {
            if !out.iter().any(|p| p == &cap[1]) {
                out.push(cap[1].to_string());
            }
        }
        out
    }

    /// Substitutes every slot in a single pass. A slot with no binding is
    /// an error; unused bindings are ignored.
    pub fn render(&self, bindings: &[(&str, &str)]) -> Result<String, LlmError> {
        let re = placeholder_re();
        let mut missing = None;
        let rendered = re.replace_all(&self.body, |cap: &regex::Captures<'_>| {
            match bindings.iter().find(|(k, _)| *k == &cap[1]) {
                Some((_, v)) => v.to_string(),
                None => {
                    missing.get_or_insert_with(|| cap[1].to_string());
                    String::new()
                }
            }
        });
        if let Some(name) = missing {
            return Err(LlmError::Template {
                id: self.id.to_string(),
                message: format!("no binding for {{{{{name}}}}}"),
            });
        }
        Ok(format!("{}\n{}", self.id.marker(), rendered))
    }
}

const P1_BODY: &str = "\
You analyze questions about facts that change over time.

## Question
{{question}}

## Window
{{window}}

## Instructions
1. List the entities the question is about: people, organisations, offices, titles or tracked quantities.
2. Rewrite the question with every temporal expression removed.
3. Give the time window the question refers to as ISO dates. Resolve relative expressions such as \"last month\" against the reference date. Leave out start and end when the question has no temporal constraint.

Reply with exactly one fenced block:
```analysis
entities: <entity> | <entity>
query: <question without temporal expressions>
start: YYYY-MM-DD
end: YYYY-MM-DD
```
";

const P2_BODY: &str = "\
You recall historical events relevant to a question.

## Question
{{question}}

## Window
{{window}}

## Instructions
List events you know about that explain how the situation in the question developed before and up to the window. Write one event per line as
subject | relation | object | YYYY-MM-DD
inside a ```quads fenced block. Write nothing else inside the block. If you know no such event, reply with an empty block.
";

const P3_BODY: &str = "\
You extend an event timeline so that it can answer a question.

## Question
{{question}}

## Window
{{window}}

## Graph
{{graph_summary}}

## Instructions
If events needed to answer the question are missing from the graph, either
(a) add them, one per line, as subject | relation | object | YYYY-MM-DD inside a ```quads fenced block, or
(b) write one line FOLLOW-UP: <search query> naming what should be looked up.
If nothing is missing, reply with NONE.
";

const P4_BODY: &str = "\
Answer the question using the event timeline below. Events are listed as [date] subject — relation — object (source).

## Question
{{question}}

## Window
{{window}}

## Temporal view
{{temporal_view}}

## Entity views
{{entity_views}}

## Instructions
Reason over the order of events. For a question about a single point in time, use the most recent event on or before that time. For a question about a period, list every distinct answer in the period separated by commas. For a multiple-choice question, reply with the option label. End with a final line
ANSWER: <answer>
";

const DIRECT_BODY: &str = "\
Answer the question from your own knowledge.

## Question
{{question}}

## Window
Your knowledge does not cover the period {{window}}.

## Instructions
If the question concerns a time you have no knowledge of, answer UNKNOWN. For a multiple-choice question, reply with the option label. End with a final line
ANSWER: <answer>
";

const RAG_BODY: &str = "\
Answer the question using the retrieved documents.

## Question
{{question}}

## Documents
{{documents}}

## Instructions
For a multiple-choice question, reply with the option label. End with a final line
ANSWER: <answer>
";

fn builtin(id: TemplateId) -> &'static str {
    match id {
        TemplateId::P1 => P1_BODY,
        TemplateId::P2 => P2_BODY,
        TemplateId::P3 => P3_BODY,
        TemplateId::P4 => P4_BODY,
        TemplateId::Direct => DIRECT_BODY,
        TemplateId::Rag => RAG_BODY,
    }
}

/// One template per id. Built-ins are used unless a directory overrides them.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<TemplateId, PromptTemplate>,
    dir: Option<PathBuf>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let templates = TemplateId::ALL
            .into_iter()
            .map(|id| {
                (
                    id,
                    PromptTemplate::new(id, builtin(id)).expect("built-in templates are valid"),
                )
            })
            .collect();
        TemplateSet {
            templates,
            dir: None,
        }
    }

    /// Built-ins overridden by any `<ID>.txt` found in `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, LlmError> {
        let mut set = Self::builtin();
        set.dir = Some(dir.as_ref().to_path_buf());
        set.reload()?;
        Ok(set)
    }

    /// Re-reads the template directory, if one is configured.
    pub fn reload(&mut self) -> Result<(), LlmError> {
        let Some(dir) = self.dir.clone() else {
            return Ok(());
        };
        for id in TemplateId::ALL {
            let path = dir.join(id.file_name());
            let body = match fs::read_to_string(&path) {
                Ok(b) => b,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => builtin(id).to_string(),
                Err(e) => {
                    return Err(LlmError::Template {
                        id: id.to_string(),
                        message: format!("{}: {e}", path.display()),
                    })
                }
            };
            self.templates.insert(id, PromptTemplate::new(id, body)?);
        }
        Ok(())
    }

    pub fn get(&self, id: TemplateId) -> &PromptTemplate {
        &self.templates[&id]
    }

    pub fn render(&self, id: TemplateId, bindings: &[(&str, &str)]) -> Result<String, LlmError> {
        self.get(id).render(bindings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_bindings() -> Vec<(&'static str, &'static str)> {
        PLACEHOLDERS.iter().map(|p| (*p, "value")).collect()
    }

    #[test]
    fn builtins_render_without_leftovers() {
        let set = TemplateSet::builtin();
        for id in TemplateId::ALL {
            let text = set.render(id, &all_bindings()).unwrap();
            assert!(!text.contains("{{"), "{id} left a placeholder");
            assert_eq!(TemplateId::from_prompt(&text), Some(id));
        }
    }

    #[test]
    fn undeclared_placeholder_rejected() {
        assert!(PromptTemplate::new(TemplateId::P1, "hi {{name}}").is_err());
        assert!(PromptTemplate::new(TemplateId::P1, "hi {{question").is_err());
        assert!(PromptTemplate::new(TemplateId::P1, "hi {{ question }}").is_ok());
    }

    #[test]
    fn missing_binding_is_error() {
        let t = PromptTemplate::new(TemplateId::P4, "{{question}} {{window}}").unwrap();
        assert!(t.render(&[("question", "q")]).is_err());
        assert_eq!(t.placeholders(), vec!["question", "window"]);
    }

    #[test]
    fn values_are_not_re_expanded() {
        let t = PromptTemplate::new(TemplateId::P4, "{{question}}|{{window}}").unwrap();
        let out = t.render(&[("question", "{{window}}"), ("window", "w")]).unwrap();
        assert!(out.ends_with("{{window}}|w"));
    }

    #[test]
    fn directory_overrides() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("P1.txt"), "## Question\n{{question}}\n").unwrap();
        let mut set = TemplateSet::load_dir(dir.path()).unwrap();
        assert_eq!(set.get(TemplateId::P1).body(), "## Question\n{{question}}\n");
        assert_eq!(set.get(TemplateId::P2).body(), P2_BODY);
        fs::write(dir.path().join("P1.txt"), "## Question\n{{question}} v2\n").unwrap();
        set.reload().unwrap();
        assert!(set.get(TemplateId::P1).body().contains("v2"));
        fs::write(dir.path().join("P2.txt"), "{{bogus}}").unwrap();
        assert!(set.reload().is_err());
    }
}
