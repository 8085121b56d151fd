use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::ScoreError;
use crate::model::{compare_keys, Artifact, NoteSegment, ReleaseNote};
use crate::scoring::fusion::{fuse, time_score};
use crate::scoring::tfidf::TfIdfModel;
use crate::scoring::ScoringConfig;

/// Text relevance of one candidate as reported by a [`TextScorer`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextVerdict {
    pub score: f64,
    pub abstained: bool,
    /// The provider could not be reached after all retries.
    pub failed: bool,
}

impl TextVerdict {
    pub fn scored(score: f64) -> Self {
        TextVerdict {
            score,
            abstained: false,
            failed: false,
        }
    }
}

/// Scores the text of candidate artifacts against one release-note segment.
pub trait TextScorer: Sync {
    fn name(&self) -> String;

    /// One verdict per candidate, in candidate order.
    fn score(
        &self,
        segment: &NoteSegment,
        candidates: &[&Artifact],
    ) -> Result<Vec<TextVerdict>, ScoreError>;
}

/// TF-IDF cosine with idf fitted on the candidate pool plus the query.
#[derive(Debug, Clone, Copy, Default)]
pub struct TfIdfScorer;

impl TextScorer for TfIdfScorer {
    fn name(&self) -> String {
        "tfidf".into()
    }

    fn score(
        &self,
        segment: &NoteSegment,
        candidates: &[&Artifact],
    ) -> Result<Vec<TextVerdict>, ScoreError> {
        let mut corpus: Vec<&str> = candidates.iter().map(|a| a.text.as_str()).collect();
        corpus.push(&segment.text);
        let model = TfIdfModel::fit(&corpus);
        let query = model.vector(&segment.text);
        Ok(candidates
            .iter()
            .map(|a| TextVerdict::scored(super::tfidf::cosine(&query, &model.vector(&a.text))))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    /// Key of the candidate artifact; the kind is that of the query.
    pub artifact: String,
    pub text_score: f64,
    pub time_score: f64,
    pub final_score: f64,
    pub rank: usize,
    pub abstained: bool,
    pub failed: bool,
    /// Distance from the release date in days, always nonnegative.
    pub distance_days: f64,
}

/// Order of entries by `(final desc, distance asc if time_tiebreak, key asc)`.
pub fn rank_order(entries: &[(f64, f64, &str)], time_tiebreak: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..entries.len()).collect();
    idx.sort_by(|&i, &j| {
        let (fa, da, ka) = entries[i];
        let (fb, db, kb) = entries[j];
        fb.total_cmp(&fa)
            .then_with(|| if time_tiebreak { da.total_cmp(&db) } else { Ordering::Equal })
            .then_with(|| compare_keys(ka, kb))
    });
    idx
}

/// Scores and ranks `candidates` for one segment of `release`.
///
/// Ties on the fused score go to the temporally nearer artifact, then to
/// the smaller key. With `alpha = 1` time plays no part at all, so the
/// ranking is the pure text ranking with key order breaking ties.
pub fn rank_candidates(
    segment: &NoteSegment,
    release: &ReleaseNote,
    candidates: &[&Artifact],
    cfg: &ScoringConfig,
    text_scorer: &dyn TextScorer,
) -> Result<Vec<ScoredCandidate>, ScoreError> {
    cfg.validate()?;
    let verdicts = text_scorer.score(segment, candidates)?;
    if verdicts.len() != candidates.len() {
        return Err(ScoreError::Provider(format!(
            "scorer returned {} verdicts for {} candidates",
            verdicts.len(),
            candidates.len()
        )));
    }

    let mut scored = Vec::with_capacity(candidates.len());
    for (a, v) in candidates.iter().zip(&verdicts) {
        let text = if v.abstained { 0.0 } else { v.score };
        let time = time_score(release.release_date, a.event_date, cfg.window_days);
        let final_score = fuse(text, time, cfg.alpha)?;
        scored.push(ScoredCandidate {
            artifact: a.key.clone(),
            text_score: text,
            time_score: time,
            final_score,
            rank: 0,
            abstained: v.abstained,
            failed: v.failed,
            distance_days: release.release_date.days_since(a.event_date).abs(),
        });
    }

    let entries: Vec<(f64, f64, &str)> = scored
        .iter()
        .map(|c| (c.final_score, c.distance_days, c.artifact.as_str()))
        .collect();
    let order = rank_order(&entries, cfg.alpha < 1.0);
    let mut ranked: Vec<ScoredCandidate> = order.into_iter().map(|i| scored[i].clone()).collect();
    for (i, c) in ranked.iter_mut().enumerate() {
        c.rank = i + 1;
    }
    Ok(ranked)
}
