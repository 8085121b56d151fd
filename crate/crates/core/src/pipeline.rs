//! Stage orchestration shared by the CLI, the guide, and the tests.
//!
//! Every output is a pure function of its inputs: timestamps come from the
//! data or the snapshot, never the wall clock, so replays are byte-identical.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{BuildManifest, Dataset, TOOL_VERSION};
use crate::error::{DatasetError, PipelineError, ScoreError};
use crate::eval::{MethodInfo, MethodRun, QueryResult};
use crate::ingest::{
    check_eligibility, collect_repo, EligibilityReport, GitHubClient, HttpTransport, IngestConfig,
    RecordingTransport, RepoData, Snapshot, SnapshotId, SnapshotWriter, COMMIT_MESSAGE_MAX_LINES,
    DEFAULT_BRANCH_NOTE,
};
use crate::model::{ArtifactKind, ReleaseNote, RepoRef, Timestamp};
use crate::notes::{build_ground_truth_with, BuildContext, DatasetBuildConfig};
use crate::scoring::{
    generate_candidates, previous_release_date, prompt, rank_candidates, ProviderConfig, ScorerKind,
    ScoringConfig, TextScorer,
};

pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";
pub const CARDS_FILE: &str = "cards.jsonl";

/// Failed LLM calls tolerated per run before recovery aborts.
pub const DEFAULT_FAILURE_BUDGET: usize = 25;

/// sha256 of the canonical JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("configs serialize");
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOutcome {
    pub report: EligibilityReport,
    /// Set when the repository was fetched and snapshotted.
    pub snapshot_id: Option<SnapshotId>,
    pub data: Option<RepoData>,
}

fn ingest_filters() -> Vec<String> {
    vec![
        "releases: drafts and unpublished releases excluded".into(),
        "pull requests: merged only".into(),
        "issues: closed only, pull requests listed as issues excluded".into(),
        DEFAULT_BRANCH_NOTE.into(),
        format!("commit messages truncated to {COMMIT_MESSAGE_MAX_LINES} lines"),
    ]
}

/// Checks eligibility against `transport`, then (when eligible or forced)
/// fetches everything and records it as a snapshot under
/// `cfg.snapshot_dir`. `now` anchors the activity test and becomes the
/// snapshot's capture time.
pub fn ingest_to_snapshot(
    transport: &dyn HttpTransport,
    token: Option<String>,
    repo: &RepoRef,
    cfg: &IngestConfig,
    now: Timestamp,
    force: bool,
) -> Result<IngestOutcome, PipelineError> {
    let writer = SnapshotWriter::create(&cfg.snapshot_dir, repo, cfg.page_size)?;
    let recording = RecordingTransport {
        inner: transport,
        writer: &writer,
    };
    let client = GitHubClient::new(&recording, token, cfg.clone())?;
    let stats = client.fetch_repo_stats(repo, now)?;
    let report = check_eligibility(&stats, now);
    if !report.passed() && !force {
        return Ok(IngestOutcome {
            report,
            snapshot_id: None,
            data: None,
        });
    }
    let mut data = collect_repo(&client, repo, None)?;
    data.stats = Some(stats);
    drop(client);
    let id = writer.finish(now, ingest_filters())?;
    Ok(IngestOutcome {
        report,
        snapshot_id: Some(id),
        data: Some(data),
    })
}

/// Re-runs the eligibility check and all fetches against a snapshot.
pub fn replay_snapshot(snapshot: &Snapshot, cfg: &IngestConfig) -> Result<IngestOutcome, PipelineError> {
    let cfg = IngestConfig {
        page_size: snapshot.index.page_size,
        ..cfg.clone()
    };
    let client = GitHubClient::new(snapshot, None, cfg)?;
    let now = snapshot.index.captured_at;
    let data = collect_repo(&client, snapshot.repo(), Some(now))?;
    let report = check_eligibility(data.stats.as_ref().expect("stats requested"), now);
    Ok(IngestOutcome {
        report,
        snapshot_id: Some(snapshot.id.clone()),
        data: Some(data),
    })
}

/// Segments, labels, and validates the releases of every snapshot.
pub fn dataset_from_snapshots(
    snapshots: &[Snapshot],
    ingest_cfg: &IngestConfig,
    build_cfg: &DatasetBuildConfig,
) -> Result<Dataset, PipelineError> {
    let mut notes = Vec::new();
    let mut artifacts = Vec::new();
    let mut drafts = 0;
    let mut ids = Vec::new();
    for snap in snapshots {
        let cfg = IngestConfig {
            page_size: snap.index.page_size,
            ..ingest_cfg.clone()
        };
        let client = GitHubClient::new(snap, None, cfg)?;
        let data = collect_repo(&client, snap.repo(), None)?;
        drafts += data.drafts_excluded;
        notes.extend(
            data.releases
                .iter()
                .map(|r| ReleaseNote::segmented(r.repo.clone(), &r.tag, r.release_date, &r.body)),
        );
        artifacts.extend(data.artifacts);
        ids.push(snap.id.to_string());
    }
    let ctx = BuildContext {
        built_at: None,
        source_snapshots: ids,
        draft_releases_excluded: drafts,
        upstream_filters: ingest_filters(),
    };
    let d = build_ground_truth_with(&notes, &artifacts, build_cfg, &ctx)?;
    if d.links.is_empty() {
        return Err(PipelineError::EmptyDataset(format!(
            "{} releases and {} artifacts yielded no valid links",
            notes.len(),
            artifacts.len()
        )));
    }
    Ok(d)
}

/// Parameters and provenance of one recovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub method: MethodInfo,
    pub scoring: ScoringConfig,
    pub config_hash: String,
    pub snapshot_ids: Vec<String>,
    pub prompt_template_version: Option<String>,
    pub prompt_template_hash: Option<String>,
    pub provider: Option<ProviderConfig>,
    pub dataset_manifest: BuildManifest,
    /// Taken from the dataset manifest.
    pub dataset_built_at: Timestamp,
    pub query_count: usize,
    pub provider_failures: usize,
    pub complete: bool,
}

/// Output of [`recover`].
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub results: Vec<QueryResult>,
    pub provider_failures: usize,
}

/// Ranks candidates for every (segment, kind) query in dataset order.
///
/// Candidates that the scorer could not judge abstain; once more than
/// `failure_budget` of them accumulate the run aborts.
pub fn recover(
    d: &Dataset,
    kinds: &[ArtifactKind],
    cfg: &ScoringConfig,
    scorer: &dyn TextScorer,
    failure_budget: usize,
) -> Result<Recovery, ScoreError> {
    cfg.validate()?;
    let truth = d.truth();
    let mut results = Vec::new();
    let mut failed = 0;
    for note in &d.notes {
        let prev = previous_release_date(note, &d.notes);
        for seg in &note.segments {
            for kind in ArtifactKind::ALL.into_iter().filter(|k| kinds.contains(k)) {
                let Some(key) = truth.get(&(seg.id.clone(), kind)) else {
                    continue;
                };
                let pool = generate_candidates(note, prev, &d.artifacts, kind, &cfg.candidate_policy);
                let ranked = rank_candidates(seg, note, &pool, cfg, scorer)?;
                failed += ranked.iter().filter(|c| c.failed).count();
                if failed > failure_budget {
                    return Err(ScoreError::FailureBudgetExceeded {
                        failed,
                        budget: failure_budget,
                    });
                }
                results.push(QueryResult::new(seg.id.clone(), kind, ranked, key.clone()));
            }
        }
    }
    Ok(Recovery {
        results,
        provider_failures: failed,
    })
}

/// Manifest for a finished recovery run.
pub fn run_manifest(
    d: &Dataset,
    method: MethodInfo,
    cfg: &ScoringConfig,
    config_hash: String,
    provider: Option<ProviderConfig>,
    recovery: &Recovery,
) -> RunManifest {
    let llm = cfg.scorer == ScorerKind::LlmProvider;
    RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        method,
        scoring: cfg.clone(),
        config_hash,
        snapshot_ids: d.build_manifest.source_snapshots.clone(),
        prompt_template_version: llm.then(|| prompt::TEMPLATE_VERSION.to_string()),
        prompt_template_hash: llm.then(prompt::template_hash),
        provider,
        dataset_manifest: d.build_manifest.clone(),
        dataset_built_at: d.build_manifest.built_at,
        query_count: recovery.results.len(),
        provider_failures: recovery.provider_failures,
        complete: true,
    }
}

/// Writes `predictions.jsonl` and `run_manifest.json` into `dir`.
pub fn write_predictions(dir: &Path, results: &[QueryResult], manifest: &RunManifest) -> Result<(), DatasetError> {
    fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
    let mut buf = Vec::new();
    for r in results {
        serde_json::to_writer(&mut buf, r).expect("results serialize");
        buf.push(b'\n');
    }
    let p = dir.join(PREDICTIONS_FILE);
    fs::write(&p, buf).map_err(|e| DatasetError::io(&p, e))?;
    let mut m = serde_json::to_string_pretty(manifest).expect("manifests serialize");
    m.push('\n');
    let p = dir.join(RUN_MANIFEST_FILE);
    fs::write(&p, m).map_err(|e| DatasetError::io(&p, e))
}

/// Reads a predictions directory written by [`write_predictions`].
pub fn read_predictions(dir: &Path) -> Result<MethodRun, DatasetError> {
    let mp = dir.join(RUN_MANIFEST_FILE);
    let text = fs::read_to_string(&mp).map_err(|e| DatasetError::io(&mp, e))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| DatasetError::Parse {
        path: mp.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let pp = dir.join(PREDICTIONS_FILE);
    let f = fs::File::open(&pp).map_err(|e| DatasetError::io(&pp, e))?;
    let mut results = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| DatasetError::io(&pp, e))?;
        if line.trim().is_empty() {
            continue;
        }
        results.push(serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            path: pp.clone(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(MethodRun {
        method: manifest.method.clone(),
        manifest: Some(manifest),
        results,
    })
}
