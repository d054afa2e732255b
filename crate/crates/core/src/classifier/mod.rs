//! Runs incident records through a classification backend.
//!
//! Three backends share one pipeline: a remote chat-completion model, the
//! offline [`keyword_oracle`], and a replay backend that answers only from
//! the [`ResponseCache`]. Every raw reply goes through
//! [`normalize_label`](crate::taxonomy::normalize_label), so results are
//! always one of the ten taxonomy labels.

pub mod cache;
pub mod oracle;
pub mod remote;

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use cache::{cache_key, CacheError, ResponseCache};
pub use oracle::keyword_oracle;
pub use remote::RemoteClient;

use crate::fsutil::write_atomic;
use crate::ingestion::{Dataset, IncidentRecord};
use crate::parallel;
use crate::prompting::{bundled_example_bank, render_prompt, FewShotExample, PromptError, PromptVersion};
use crate::taxonomy::{normalize_label, FailureType};

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com";
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const CREDENTIAL_ENV: &str = "FAILTAX_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackendKind {
    RemoteLlm,
    KeywordOracle,
    Replay,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::RemoteLlm => "remote-llm",
            BackendKind::KeywordOracle => "keyword-oracle",
            BackendKind::Replay => "replay",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "llm" | "remote" | "remote-llm" => Ok(BackendKind::RemoteLlm),
            "oracle" | "keyword-oracle" => Ok(BackendKind::KeywordOracle),
            "replay" => Ok(BackendKind::Replay),
            other => Err(format!("unknown backend '{other}' (expected llm, oracle or replay)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_in_flight: usize,
    pub retry_limit: u32,
    pub backoff_base: Duration,
    pub request_timeout: Duration,
    /// Name of the environment variable holding the API key.
    pub credential_env: String,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::KeywordOracle,
            endpoint: DEFAULT_ENDPOINT.to_string(),
            model: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            max_in_flight: 4,
            retry_limit: 3,
            backoff_base: Duration::from_secs(1),
            request_timeout: Duration::from_secs(60),
            credential_env: CREDENTIAL_ENV.to_string(),
        }
    }
}

impl BackendConfig {
    pub fn oracle() -> Self {
        Self::default()
    }

    pub fn remote() -> Self {
        BackendConfig {
            kind: BackendKind::RemoteLlm,
            ..Self::default()
        }
    }

    pub fn replay() -> Self {
        BackendConfig {
            kind: BackendKind::Replay,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ClassifyError::InvalidConfig(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_in_flight == 0 {
            return Err(ClassifyError::InvalidConfig("max_in_flight must be at least 1".into()));
        }
        if self.kind == BackendKind::RemoteLlm && self.model.trim().is_empty() {
            return Err(ClassifyError::InvalidConfig("model name is empty".into()));
        }
        Ok(())
    }

    /// Cache key for a rendered prompt. Replay reads the entries the remote
    /// backend wrote, so both use the remote identity.
    pub fn cache_key(&self, version: PromptVersion, body: &str) -> String {
        cache_key(
            BackendKind::RemoteLlm.as_str(),
            &self.model,
            self.temperature,
            version,
            body,
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("backend unavailable after {attempts} attempts: {last_error}")]
    BackendUnavailable { attempts: u32, last_error: String },
    #[error("backend rejected request with HTTP {status}: {body}")]
    BackendRejected { status: u16, body: String },
    #[error("malformed backend reply: {0}")]
    MalformedReply(String),
    #[error("no cached reply for record {0}")]
    CacheMiss(String),
    #[error("invalid credential: {0}")]
    InvalidCredential(String),
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("prompt: {0}")]
    Prompt(String),
    #[error("all {count} records failed; first error: {first}")]
    AllRecordsFailed {
        count: usize,
        first: Box<ClassifyError>,
    },
}

impl From<PromptError> for ClassifyError {
    fn from(e: PromptError) -> Self {
        ClassifyError::Prompt(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub record_id: String,
    pub raw_reply: String,
    pub label: FailureType,
    pub non_canonical: bool,
    pub prompt_version: PromptVersion,
    pub backend_kind: String,
    pub cached: bool,
}

/// Per-record outcome of a dataset run.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordOutcome {
    pub record_id: String,
    pub result: Result<ClassificationResult, ClassifyError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRun {
    /// One entry per input record, in dataset order.
    pub outcomes: Vec<RecordOutcome>,
}

impl DatasetRun {
    pub fn results(&self) -> impl Iterator<Item = &ClassificationResult> {
        self.outcomes.iter().filter_map(|o| o.result.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (&str, &ClassifyError)> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().err().map(|e| (o.record_id.as_str(), e)))
    }

    pub fn failed_count(&self) -> usize {
        self.failures().count()
    }

    pub fn succeeded_count(&self) -> usize {
        self.results().count()
    }

    pub fn non_canonical_count(&self) -> usize {
        self.results().filter(|r| r.non_canonical).count()
    }

    pub fn into_results(self) -> Vec<ClassificationResult> {
        self.outcomes.into_iter().filter_map(|o| o.result.ok()).collect()
    }
}

/// A configured backend plus the few-shot bank used for V2 prompts.
pub struct Classifier {
    config: BackendConfig,
    examples: Vec<FewShotExample>,
    remote: Option<RemoteClient>,
}

impl Classifier {
    pub fn new(config: BackendConfig) -> Result<Self, ClassifyError> {
        Self::with_examples(config, bundled_example_bank())
    }

    pub fn with_examples(
        config: BackendConfig,
        examples: Vec<FewShotExample>,
    ) -> Result<Self, ClassifyError> {
        config.validate()?;
        let remote = (config.kind == BackendKind::RemoteLlm).then(|| RemoteClient::new(&config));
        Ok(Classifier {
            config,
            examples,
            remote,
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    pub fn classify_record(
        &self,
        record: &IncidentRecord,
        version: PromptVersion,
        cache: &ResponseCache,
    ) -> Result<ClassificationResult, ClassifyError> {
        let prompt = render_prompt(version, &record.cause, &self.examples)?;
        let (raw_reply, cached) = match self.config.kind {
            BackendKind::KeywordOracle => {
                (keyword_oracle(&record.cause).display_text().to_string(), false)
            }
            BackendKind::Replay => {
                let key = self.config.cache_key(version, &prompt.body);
                let reply = cache
                    .get(&key)
                    .ok_or_else(|| ClassifyError::CacheMiss(record.id.clone()))?;
                (reply, true)
            }
            BackendKind::RemoteLlm => {
                let key = self.config.cache_key(version, &prompt.body);
                match cache.get(&key) {
                    Some(reply) => (reply, true),
                    None => {
                        let client = self.remote.as_ref().expect("remote client built for remote kind");
                        let reply = client.complete(&prompt.body)?;
                        cache.insert(key, reply.clone());
                        (reply, false)
                    }
                }
            }
        };
        let normalized = normalize_label(&raw_reply);
        Ok(ClassificationResult {
            record_id: record.id.clone(),
            raw_reply,
            label: normalized.label,
            non_canonical: normalized.non_canonical,
            prompt_version: version,
            backend_kind: self.config.kind.as_str().to_string(),
            cached,
        })
    }

    /// Classifies every record, keeping per-record failures in place.
    pub fn run_dataset(
        &self,
        ds: &Dataset,
        version: PromptVersion,
        cache: &ResponseCache,
    ) -> DatasetRun {
        let outcomes = parallel::map_ordered(&ds.records, self.config.max_in_flight, |record| {
            RecordOutcome {
                record_id: record.id.clone(),
                result: self.classify_record(record, version, cache),
            }
        });
        DatasetRun { outcomes }
    }

    /// Classifies every record with up to `max_in_flight` concurrent
    /// requests. A failing record is reported in its slot and the run
    /// continues; the call errors only when every record fails.
    pub fn classify_dataset(
        &self,
        ds: &Dataset,
        version: PromptVersion,
        cache: &ResponseCache,
    ) -> Result<DatasetRun, ClassifyError> {
        let run = self.run_dataset(ds, version, cache);
        if !run.outcomes.is_empty() && run.succeeded_count() == 0 {
            let first = run.outcomes[0]
                .result
                .clone()
                .expect_err("every outcome failed");
            return Err(ClassifyError::AllRecordsFailed {
                count: run.outcomes.len(),
                first: Box::new(first),
            });
        }
        Ok(run)
    }
}

/// Single-record convenience wrapper using the bundled example bank.
pub fn classify_record(
    record: &IncidentRecord,
    version: PromptVersion,
    backend: &BackendConfig,
    cache: &ResponseCache,
) -> Result<ClassificationResult, ClassifyError> {
    Classifier::new(backend.clone())?.classify_record(record, version, cache)
}

pub fn classify_dataset(
    ds: &Dataset,
    version: PromptVersion,
    backend: &BackendConfig,
    cache: &ResponseCache,
) -> Result<DatasetRun, ClassifyError> {
    Classifier::new(backend.clone())?.classify_dataset(ds, version, cache)
}

pub fn results_to_jsonl<'a>(results: impl IntoIterator<Item = &'a ClassificationResult>) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r).expect("result serializes"));
        out.push('\n');
    }
    out
}

pub fn write_results<'a>(
    path: &Path,
    results: impl IntoIterator<Item = &'a ClassificationResult>,
) -> io::Result<()> {
    write_atomic(path, results_to_jsonl(results).as_bytes())
}

pub fn read_results(path: &Path) -> io::Result<Vec<ClassificationResult>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let result = serde_json::from_str(&line).map_err(|e| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("{}: line {}: {e}", path.display(), idx + 1),
            )
        })?;
        out.push(result);
    }
    Ok(out)
}
