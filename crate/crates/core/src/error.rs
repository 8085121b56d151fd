use std::path::PathBuf;

use thiserror::Error;

use crate::model::ArtifactKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid timestamp {0}")]
    Timestamp(String),
    #[error("invalid repository reference {0:?}")]
    InvalidRepo(String),
    #[error("unknown artifact kind {0:?}")]
    InvalidKind(String),
    #[error("key {key:?} is not a valid {kind} key")]
    InvalidKey { kind: ArtifactKind, key: String },
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record in {path} line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("dataset schema version {found} is not supported (expected {expected})")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error("dataset integrity violated: {0}")]
    Integrity(String),
    #[error("inconsistent input: {0}")]
    InconsistentInput(String),
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited; retry after {retry_after_secs}s")]
    RateLimited { retry_after_secs: u64 },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("unexpected HTTP status {status} for {url}")]
    Http { status: u16, url: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("could not decode response from {url}: {message}")]
    Decode { url: String, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("snapshot corrupt: {0}")]
    SnapshotCorrupt(String),
    #[error("request not present in snapshot: {0}")]
    NotInSnapshot(String),
    #[error("invalid ingest configuration: {0}")]
    Config(String),
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("value outside [0, 1]: {0}")]
    Domain(String),
    #[error("invalid scoring configuration: {0}")]
    Config(String),
    #[error("LLM provider failure: {0}")]
    Provider(String),
    #[error("{failed} provider calls failed, budget is {budget}")]
    FailureBudgetExceeded { failed: usize, budget: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no query results to evaluate")]
    EmptyInput,
    #[error("methods were evaluated on different query sets: {0}")]
    QuerySetMismatch(String),
    #[error("segment has no linked pull request, issue, or commit")]
    NoLinks,
    #[error("invalid change-card input: {0}")]
    InvalidLinks(String),
}

/// Any stage failure, with the process exit code the CLI reports for it.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("repository is not eligible: failed criteria {0:?}")]
    Ineligible(Vec<u8>),
    #[error("dataset is empty: {0}")]
    EmptyDataset(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Usage(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Ineligible(_) => 2,
            PipelineError::Ingest(IngestError::Auth(_) | IngestError::RateLimited { .. }) => 3,
            PipelineError::EmptyDataset(_) => 4,
            PipelineError::Score(ScoreError::Provider(_) | ScoreError::FailureBudgetExceeded { .. }) => 5,
            PipelineError::Eval(EvalError::QuerySetMismatch(_)) => 6,
            PipelineError::Usage(_) => 64,
            _ => 1,
        }
    }
}
