//! Layered configuration: TOML file, then `CHRONOS__SECTION__KEY`
//! environment variables, then `section.key=value` overrides.
//!
//! Relative paths resolve against the config file's directory, whichever
//! layer set them, and against the working directory when there is no file.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingProvider, LocalEmbedder, RemoteEmbedder, RemoteEmbedderConfig};
use crate::error::{Error, Result};
use crate::harness::{Method, RunConfig};
use crate::llm::{Gateway, HttpBackend, HttpBackendConfig, LlmBackend, ScriptedBackend, TemplateSet};
use crate::retrieval::RetrievalParams;
use crate::store::{parse_date, TimeWindow};

pub const ENV_PREFIX: &str = "CHRONOS__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    /// `local` or `remote`.
    pub provider: String,
    pub dim: usize,
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            provider: "local".into(),
            dim: 256,
            endpoint: String::new(),
            model: String::new(),
            api_key_env: "CHRONOS_API_KEY".into(),
            batch_size: 32,
            max_in_flight: 4,
            timeout_secs: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    /// `scripted` or `http`.
    pub backend: String,
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    pub timeout_secs: u64,
    /// Total attempts per call.
    pub retries: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
}

impl Default for LlmConfig {
    fn default() -> Self {
        let http = HttpBackendConfig::default();
        LlmConfig {
            backend: "scripted".into(),
            endpoint: http.endpoint,
            model: http.model,
            api_key_env: http.api_key_env,
            timeout_secs: http.timeout.as_secs(),
            retries: http.attempts,
            backoff_ms: http.backoff.as_millis() as u64,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptsConfig {
    /// Directory of `<ID>.txt` overrides; built-ins when unset.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScriptedConfig {
    pub lexicon: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub commonsense: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub start: String,
    pub end: String,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            start: "2024-01-01".into(),
            end: "2025-10-31".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueryConfig {
    /// Anchor for relative expressions; the window end when unset.
    pub reference_date: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EegConfig {
    pub augment_rounds: usize,
}

impl Default for EegConfig {
    fn default() -> Self {
        EegConfig { augment_rounds: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub workers: usize,
    pub deterministic: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            workers: 4,
            deterministic: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub embedding: EmbeddingConfig,
    pub retrieval: RetrievalParams,
    pub llm: LlmConfig,
    pub prompts: PromptsConfig,
    pub scripted: ScriptedConfig,
    pub knowledge_window: WindowConfig,
    pub query: QueryConfig,
    pub eeg: EegConfig,
    pub harness: HarnessConfig,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Reads a raw override value as a TOML literal, falling back to a string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_key(table: &mut toml::Table, dotted: &str, raw: &str) -> Result<()> {
    let (section, key) = dotted
        .split_once('.')
        .filter(|(s, k)| !s.is_empty() && !k.is_empty() && !k.contains('.'))
        .ok_or_else(|| cfg_err(format!("expected section.key, got {dotted:?}")))?;
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let toml::Value::Table(sec) = entry else {
        return Err(cfg_err(format!("{section} is not a section")));
    };
    sec.insert(key.to_string(), parse_value(raw));
    Ok(())
}

impl Config {
    /// Layers `file` (optional), environment variables from `env` and
    /// `section.key=value` strings from `overrides`, in that order.
    pub fn load<I, S>(
        file: Option<&Path>,
        env: impl IntoIterator<Item = (String, String)>,
        overrides: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut table = match file {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| cfg_err(format!("{}: {e}", p.display())))?
                .parse::<toml::Table>()
                .map_err(|e| cfg_err(format!("{}: {e}", p.display())))?,
            None => toml::Table::new(),
        };
        let mut env: Vec<(String, String)> = env
            .into_iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX))
            .collect();
        env.sort();
        for (k, v) in env {
            let dotted = k[ENV_PREFIX.len()..].to_lowercase().replacen("__", ".", 1);
            set_key(&mut table, &dotted, &v)?;
        }
        for o in overrides {
            let (k, v) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("expected key=value, got {:?}", o.as_ref())))?;
            set_key(&mut table, k.trim(), v.trim())?;
        }
        let mut config: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| cfg_err(e.to_string()))?;
        if let Some(base) = file.and_then(Path::parent) {
            config.resolve_paths(base);
        }
        config.validate()?;
        Ok(config)
    }

    /// Loads using the process environment.
    pub fn from_env<I, S>(file: Option<&Path>, overrides: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::load(file, std::env::vars(), overrides)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p.as_mut().filter(|p| p.is_relative()) {
                *path = base.join(&*path);
            }
        };
        fix(&mut self.prompts.dir);
        fix(&mut self.scripted.lexicon);
        fix(&mut self.scripted.history);
        fix(&mut self.scripted.commonsense);
    }

    pub fn validate(&self) -> Result<()> {
        self.retrieval.validate()?;
        self.knowledge_window()?;
        self.reference_date()?;
        if !["local", "remote"].contains(&self.embedding.provider.as_str()) {
            return Err(cfg_err(format!("embedding.provider {:?}: expected local or remote", self.embedding.provider)));
        }
        if !["scripted", "http"].contains(&self.llm.backend.as_str()) {
            return Err(cfg_err(format!("llm.backend {:?}: expected scripted or http", self.llm.backend)));
        }
        if self.harness.workers == 0 {
            return Err(cfg_err("harness.workers must be at least 1"));
        }
        Ok(())
    }

    pub fn knowledge_window(&self) -> Result<TimeWindow> {
        Ok(TimeWindow::parse(&self.knowledge_window.start, &self.knowledge_window.end)?)
    }

    pub fn reference_date(&self) -> Result<NaiveDate> {
        match &self.query.reference_date {
            Some(d) => Ok(parse_date(d)?),
            None => Ok(self.knowledge_window()?.end),
        }
    }

    pub fn embedder(&self) -> Result<Arc<dyn EmbeddingProvider>> {
        let e = &self.embedding;
        Ok(match e.provider.as_str() {
            "remote" => Arc::new(RemoteEmbedder::new(RemoteEmbedderConfig {
                endpoint: e.endpoint.clone(),
                model: e.model.clone(),
                api_key: std::env::var(&e.api_key_env).ok().filter(|k| !k.is_empty()),
                dim: e.dim,
                batch_size: e.batch_size,
                max_in_flight: e.max_in_flight,
                timeout: Duration::from_secs(e.timeout_secs),
            })?),
            _ => Arc::new(LocalEmbedder::new(e.dim)?),
        })
    }

    pub fn backend(&self) -> Result<Arc<dyn LlmBackend>> {
        let l = &self.llm;
        Ok(match l.backend.as_str() {
            "http" => Arc::new(HttpBackend::new(HttpBackendConfig {
                endpoint: l.endpoint.clone(),
                model: l.model.clone(),
                api_key_env: l.api_key_env.clone(),
                timeout: Duration::from_secs(l.timeout_secs),
                attempts: l.retries,
                backoff: Duration::from_millis(l.backoff_ms),
            })?),
            _ => {
                let s = &self.scripted;
                let (Some(lexicon), Some(history)) = (&s.lexicon, &s.history) else {
                    return Err(cfg_err(
                        "the scripted backend needs scripted.lexicon and scripted.history",
                    ));
                };
                Arc::new(ScriptedBackend::from_files(lexicon, history, s.commonsense.as_deref())?)
            }
        })
    }

    pub fn gateway(&self) -> Result<Gateway> {
        let templates = match &self.prompts.dir {
            Some(dir) => TemplateSet::load_dir(dir)?,
            None => TemplateSet::builtin(),
        };
        Ok(Gateway::new(self.backend()?, self.knowledge_window()?)
            .with_templates(templates)
            .with_reference_date(self.reference_date()?)
            .with_max_in_flight(self.llm.max_in_flight))
    }

    pub fn run_config(&self, method: Method) -> Result<RunConfig> {
        let mut rc = RunConfig::new(method, self.knowledge_window()?);
        rc.retrieval = self.retrieval;
        rc.deterministic = self.harness.deterministic;
        rc.augment_rounds = self.eeg.augment_rounds;
        rc.workers = self.harness.workers;
        Ok(rc)
    }
}
