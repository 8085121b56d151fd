//! Traceability link recovery between release notes and the pull requests,
//! commits, and issues behind them.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. [`ingest`] fetches releases and artifacts from the GitHub REST API
//!    into a replayable snapshot and checks repository eligibility.
//! 2. [`notes`] segments release-note markdown, labels embedded links, and
//!    builds a ground-truth [`Dataset`].
//! 3. [`scoring`] ranks candidate artifacts per segment by fusing a text
//!    score (TF-IDF cosine or an LLM YES/NO verdict) with a time score.
//! 4. [`eval`] computes Precision@1 and MRR, renders comparison reports,
//!    and assembles What/Why/How change cards.
//!
//! [`pipeline`] strings the stages together the way the `tracelink` CLI
//! runs them.

pub mod backoff;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod model;
pub mod notes;
pub mod pipeline;
pub mod scoring;
pub mod synth;

pub use dataset::{export_dataset, import_dataset, Dataset};
pub use error::{DatasetError, EvalError, IngestError, ModelError, PipelineError, ScoreError};
pub use model::{
    artifact_date, Artifact, ArtifactKind, ArtifactRef, NoteSegment, ReleaseNote, RepoRef,
    SegmentId, Timestamp, TraceLink,
};
