//! LLM-backed text scoring.
//!
//! Each call pairs one segment with one candidate in the binary prompt and
//! maps the completion to 1.0 / 0.0. Decoding is pinned to temperature 0.0
//! and 50 new tokens. Raw provider responses go through a cassette
//! directory so a run can be replayed offline byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::backoff::{exponential, Sleeper, ThreadSleeper};
use crate::error::ScoreError;
use crate::model::{Artifact, NoteSegment};
use crate::scoring::prompt::build_prompt;
use crate::scoring::rank::{TextScorer, TextVerdict};
use crate::scoring::verdict::parse_llm_verdict;

pub const TEMPERATURE: f64 = 0.0;
pub const MAX_NEW_TOKENS: u32 = 50;
pub const DEFAULT_API_KEY_ENV: &str = "LLM_API_KEY";

/// Request/response shape spoken by the endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiFlavor {
    /// Chat-completions style (`messages`, `max_tokens`).
    OpenaiChat,
    /// Hugging Face Inference API text generation (`inputs`, `parameters`).
    HuggingFace,
    /// Google AI Studio `generateContent`.
    Gemini,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model_id: String,
    pub api_key_env: String,
    pub flavor: ApiFlavor,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: "https://api-inference.huggingface.co/models/meta-llama/Meta-Llama-3-8B-Instruct".into(),
            model_id: "meta-llama/Meta-Llama-3-8B-Instruct".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            flavor: ApiFlavor::HuggingFace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub provider: ProviderConfig,
    pub model_id: String,
}

impl LlmRequest {
    pub fn new(prompt: String, provider: &ProviderConfig) -> Self {
        LlmRequest {
            prompt,
            temperature: TEMPERATURE,
            max_new_tokens: MAX_NEW_TOKENS,
            provider: provider.clone(),
            model_id: provider.model_id.clone(),
        }
    }

    /// JSON body for the provider's flavor.
    pub fn body(&self) -> Value {
        match self.provider.flavor {
            ApiFlavor::OpenaiChat => json!({
                "model": self.model_id,
                "messages": [{"role": "user", "content": self.prompt}],
                "temperature": self.temperature,
                "max_tokens": self.max_new_tokens,
            }),
            ApiFlavor::HuggingFace => json!({
                "inputs": self.prompt,
                "parameters": {
                    "temperature": self.temperature,
                    "max_new_tokens": self.max_new_tokens,
                    "do_sample": false,
                    "return_full_text": false,
                },
            }),
            ApiFlavor::Gemini => json!({
                "contents": [{"parts": [{"text": self.prompt}]}],
                "generationConfig": {
                    "temperature": self.temperature,
                    "maxOutputTokens": self.max_new_tokens,
                },
            }),
        }
    }

    /// Cassette key: sha256 over everything that determines the completion.
    /// The endpoint URL is left out so a cassette survives endpoint moves.
    pub fn cassette_key(&self) -> String {
        let canonical = json!({
            "flavor": self.provider.flavor,
            "model_id": self.model_id,
            "prompt": self.prompt,
            "temperature": self.temperature,
            "max_new_tokens": self.max_new_tokens,
        });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }
}

/// Pulls the generated text out of a raw response body. Unknown shapes
/// fall back to the raw body.
pub fn extract_completion(raw: &str) -> String {
    let Ok(v) = serde_json::from_str::<Value>(raw) else {
        return raw.to_string();
    };
    let candidates = [
        v.pointer("/choices/0/message/content"),
        v.pointer("/choices/0/text"),
        v.pointer("/0/generated_text"),
        v.pointer("/generated_text"),
        v.pointer("/candidates/0/content/parts/0/text"),
        v.pointer("/completion"),
    ];
    let found = candidates
        .into_iter()
        .flatten()
        .find_map(|x| x.as_str().map(str::to_string));
    found.unwrap_or_else(|| raw.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportFailure {
    /// Worth retrying (timeouts, 429, 5xx).
    pub transient: bool,
    pub message: String,
}

/// Sends one request and returns the raw response body.
pub trait LlmTransport: Send + Sync {
    fn complete(&self, req: &LlmRequest) -> Result<String, TransportFailure>;
}

pub struct HttpLlmTransport {
    client: reqwest::blocking::Client,
    api_key: String,
}

impl HttpLlmTransport {
    pub fn from_env(provider: &ProviderConfig) -> Result<Self, ScoreError> {
        let api_key = std::env::var(&provider.api_key_env).map_err(|_| {
            ScoreError::Config(format!("environment variable {} is not set", provider.api_key_env))
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .user_agent(concat!("tracelink/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| ScoreError::Config(e.to_string()))?;
        Ok(HttpLlmTransport { client, api_key })
    }
}

impl LlmTransport for HttpLlmTransport {
    fn complete(&self, req: &LlmRequest) -> Result<String, TransportFailure> {
        let builder = self.client.post(&req.provider.endpoint).json(&req.body());
        let builder = match req.provider.flavor {
            ApiFlavor::Gemini => builder.header("x-goog-api-key", &self.api_key),
            _ => builder.bearer_auth(&self.api_key),
        };
        let resp = builder.send().map_err(|e| TransportFailure {
            transient: true,
            message: e.to_string(),
        })?;
        let status = resp.status();
        let body = resp.text().map_err(|e| TransportFailure {
            transient: true,
            message: e.to_string(),
        })?;
        if status.is_success() {
            Ok(body)
        } else {
            Err(TransportFailure {
                transient: status.as_u16() == 429 || status.is_server_error(),
                message: format!("HTTP {status}: {}", body.chars().take(200).collect::<String>()),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CassetteMode {
    /// Serve only recorded responses; a miss is a hard failure.
    Replay,
    /// Serve recorded responses, call through and record on a miss.
    Record,
}

#[derive(Serialize, Deserialize)]
struct CassetteEntry {
    key: String,
    model_id: String,
    prompt: String,
    temperature: f64,
    max_new_tokens: u32,
    response: String,
}

/// Records raw completions to `<dir>/<cassette_key>.json` and replays them.
pub struct CassetteTransport {
    dir: PathBuf,
    mode: CassetteMode,
    inner: Option<Box<dyn LlmTransport>>,
    write_lock: Mutex<()>,
}

impl CassetteTransport {
    pub fn replay(dir: &Path) -> Self {
        CassetteTransport {
            dir: dir.to_path_buf(),
            mode: CassetteMode::Replay,
            inner: None,
            write_lock: Mutex::new(()),
        }
    }

    pub fn record(dir: &Path, inner: Box<dyn LlmTransport>) -> Self {
        CassetteTransport {
            dir: dir.to_path_buf(),
            mode: CassetteMode::Record,
            inner: Some(inner),
            write_lock: Mutex::new(()),
        }
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }
}

impl LlmTransport for CassetteTransport {
    fn complete(&self, req: &LlmRequest) -> Result<String, TransportFailure> {
        let key = req.cassette_key();
        let path = self.path(&key);
        if let Ok(raw) = fs::read_to_string(&path) {
            let entry: CassetteEntry = serde_json::from_str(&raw).map_err(|e| TransportFailure {
                transient: false,
                message: format!("corrupt cassette entry {}: {e}", path.display()),
            })?;
            if entry.key != key || entry.prompt != req.prompt {
                return Err(TransportFailure {
                    transient: false,
                    message: format!("cassette entry {} does not match its request", path.display()),
                });
            }
            return Ok(entry.response);
        }
        let (CassetteMode::Record, Some(inner)) = (self.mode, self.inner.as_ref()) else {
            return Err(TransportFailure {
                transient: false,
                message: format!("no cassette entry {key} in {}", self.dir.display()),
            });
        };
        let response = inner.complete(req)?;
        let entry = CassetteEntry {
            key: key.clone(),
            model_id: req.model_id.clone(),
            prompt: req.prompt.clone(),
            temperature: req.temperature,
            max_new_tokens: req.max_new_tokens,
            response: response.clone(),
        };
        let _guard = self.write_lock.lock().unwrap();
        let io_err = |e: std::io::Error| TransportFailure {
            transient: false,
            message: format!("cannot write cassette {}: {e}", path.display()),
        };
        fs::create_dir_all(&self.dir).map_err(io_err)?;
        fs::write(&path, serde_json::to_string_pretty(&entry).expect("entry serializes") + "\n")
            .map_err(io_err)?;
        Ok(response)
    }
}

/// Text scorer that asks an LLM for a YES/NO verdict per candidate.
pub struct LlmScorer {
    transport: Box<dyn LlmTransport>,
    provider: ProviderConfig,
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub max_in_flight: usize,
    sleeper: Box<dyn Sleeper>,
}

impl LlmScorer {
    pub fn new(transport: Box<dyn LlmTransport>, provider: ProviderConfig) -> Self {
        LlmScorer {
            transport,
            provider,
            max_retries: 3,
            backoff_base: Duration::from_millis(500),
            max_in_flight: 2,
            sleeper: Box::new(ThreadSleeper),
        }
    }

    pub fn with_sleeper(mut self, sleeper: Box<dyn Sleeper>) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn provider(&self) -> &ProviderConfig {
        &self.provider
    }

    fn judge(&self, segment: &NoteSegment, artifact: &Artifact) -> Result<TextVerdict, ScoreError> {
        let req = LlmRequest::new(build_prompt(segment, artifact), &self.provider);
        let mut last = String::new();
        for attempt in 0..=self.max_retries {
            match self.transport.complete(&req) {
                Ok(raw) => {
                    let (score, abstained) = parse_llm_verdict(&extract_completion(&raw));
                    return Ok(TextVerdict {
                        score,
                        abstained,
                        failed: false,
                    });
                }
                Err(f) if !f.transient => return Err(ScoreError::Provider(f.message)),
                Err(f) => {
                    last = f.message;
                    if attempt < self.max_retries {
                        self.sleeper
                            .sleep(exponential(self.backoff_base, attempt, Duration::from_secs(30)));
                    }
                }
            }
        }
        tracing::warn!(segment = %segment.id, artifact = %artifact.key, error = %last, "provider failed after retries; candidate abstains");
        Ok(TextVerdict {
            score: 0.0,
            abstained: true,
            failed: true,
        })
    }
}

impl TextScorer for LlmScorer {
    fn name(&self) -> String {
        format!("llm:{}", self.provider.model_id)
    }

    fn score(
        &self,
        segment: &NoteSegment,
        candidates: &[&Artifact],
    ) -> Result<Vec<TextVerdict>, ScoreError> {
        let workers = self.max_in_flight.max(1).min(candidates.len());
        if workers <= 1 {
            return candidates.iter().map(|a| self.judge(segment, a)).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Result<TextVerdict, ScoreError>>>> =
            Mutex::new(vec![None; candidates.len()]);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= candidates.len() {
                        break;
                    }
                    let r = self.judge(segment, candidates[i]);
                    slots.lock().unwrap()[i] = Some(r);
                });
            }
        });
        slots
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|r| r.expect("every slot is filled"))
            .collect()
    }
}
