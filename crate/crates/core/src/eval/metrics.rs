use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::model::{ArtifactKind, SegmentId};
use crate::scoring::ScoredCandidate;

/// One (segment, kind) query: the ranking a method produced and the key of
/// the true artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub segment: SegmentId,
    pub kind: ArtifactKind,
    pub ranked: Vec<ScoredCandidate>,
    pub truth: String,
    /// 1-based position of `truth` in `ranked`, if present.
    pub rank_of_truth: Option<usize>,
}

impl QueryResult {
    /// Derives `rank_of_truth` from the ranking order.
    pub fn new(segment: SegmentId, kind: ArtifactKind, ranked: Vec<ScoredCandidate>, truth: String) -> Self {
        let rank_of_truth = ranked
            .iter()
            .position(|c| c.artifact.eq_ignore_ascii_case(&truth))
            .map(|i| i + 1);
        QueryResult {
            segment,
            kind,
            ranked,
            truth,
            rank_of_truth,
        }
    }
}

/// Fraction of queries whose truth is ranked first.
pub fn precision_at_1(results: &[QueryResult]) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let hits = results.iter().filter(|r| r.rank_of_truth == Some(1)).count();
    Ok(hits as f64 / results.len() as f64)
}

/// Mean reciprocal rank; a query whose truth is absent contributes 0.
pub fn mrr(results: &[QueryResult]) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let sum: f64 = results
        .iter()
        .map(|r| r.rank_of_truth.map_or(0.0, |k| 1.0 / k as f64))
        .sum();
    Ok(sum / results.len() as f64)
}

/// Queries whose truth is missing from the ranking.
pub fn misses(results: &[QueryResult]) -> usize {
    results.iter().filter(|r| r.rank_of_truth.is_none()).count()
}
