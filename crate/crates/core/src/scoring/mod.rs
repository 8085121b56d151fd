//! Candidate generation, text scoring, time scoring, and fused ranking.
//!
//! Every candidate gets
//!
//! ```text
//! final = alpha * text + (1 - alpha) * time
//! ```
//!
//! where `text` comes from a [`TextScorer`] (TF-IDF cosine or an LLM
//! verdict) and `time` decays linearly with the distance between the
//! release date and the artifact's event date, reaching zero at the window.

pub mod candidates;
pub mod fusion;
pub mod llm;
pub mod prompt;
pub mod rank;
pub mod tfidf;
pub mod verdict;

use serde::{Deserialize, Serialize};

pub use candidates::{generate_candidates, previous_release_date, CandidatePolicy, PoolMode};
pub use fusion::{fuse, time_score};
pub use llm::{
    ApiFlavor, CassetteMode, CassetteTransport, HttpLlmTransport, LlmRequest, LlmScorer,
    LlmTransport, ProviderConfig, TransportFailure,
};
pub use prompt::{build_prompt, parse_prompt};
pub use rank::{rank_candidates, rank_order, ScoredCandidate, TextScorer, TextVerdict, TfIdfScorer};
pub use tfidf::{tfidf_text_score, tokenize, TfIdfModel};
pub use verdict::parse_llm_verdict;

use crate::error::ScoreError;

pub const DEFAULT_ALPHA: f64 = 0.7;
pub const DEFAULT_WINDOW_DAYS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    TfIdf,
    LlmProvider,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub alpha: f64,
    pub window_days: u32,
    pub candidate_policy: CandidatePolicy,
    pub scorer: ScorerKind,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            alpha: DEFAULT_ALPHA,
            window_days: DEFAULT_WINDOW_DAYS,
            candidate_policy: CandidatePolicy::default(),
            scorer: ScorerKind::TfIdf,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), ScoreError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ScoreError::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.window_days < 1 {
            return Err(ScoreError::Config("window_days must be at least 1".into()));
        }
        if self.candidate_policy.fixed_window_days < 1 {
            return Err(ScoreError::Config("fixed_window_days must be at least 1".into()));
        }
        Ok(())
    }
}
