use std::collections::{BTreeMap, BTreeSet};

use tracelink::eval::{cards_from_links, compare_report, MethodInfo, MethodRun};
use tracelink::ingest::{load_snapshot, HttpTransport, IngestConfig};
use tracelink::notes::DatasetBuildConfig;
use tracelink::pipeline::{
    dataset_from_snapshots, ingest_to_snapshot, read_predictions, recover, replay_snapshot,
    run_manifest, write_predictions,
};
use tracelink::scoring::{ScoringConfig, TextScorer, TextVerdict, TfIdfScorer};
use tracelink::synth::{SynthRepo, SynthSpec};
use tracelink::{Artifact, ArtifactKind, NoteSegment, ScoreError, SegmentId};

fn snapshot_of(repo: &SynthRepo, dir: &std::path::Path, page_size: u32) -> tracelink::ingest::Snapshot {
    let cfg = IngestConfig {
        snapshot_dir: dir.to_path_buf(),
        page_size,
        ..IngestConfig::default()
    };
    let t = repo.transport(page_size);
    let out = ingest_to_snapshot(&t, None, &repo.spec.repo, &cfg, repo.now, false).unwrap();
    assert!(out.report.passed(), "{}", out.report.render());
    let snap = load_snapshot(dir, &repo.spec.repo).unwrap();
    assert_eq!(Some(&snap.id), out.snapshot_id.as_ref());
    snap
}

struct Oracle(BTreeMap<SegmentId, BTreeSet<String>>);

impl TextScorer for Oracle {
    fn name(&self) -> String {
        "oracle".into()
    }
    fn score(&self, seg: &NoteSegment, cands: &[&Artifact]) -> Result<Vec<TextVerdict>, ScoreError> {
        let truth = self.0.get(&seg.id);
        Ok(cands
            .iter()
            .map(|a| TextVerdict::scored(if truth.is_some_and(|t| t.contains(&a.key)) { 1.0 } else { 0.0 }))
            .collect())
    }
}

#[test]
fn snapshot_to_report() {
    let repo = SynthRepo::generate(SynthSpec::default());
    let dir = tempfile::tempdir().unwrap();
    let snap = snapshot_of(&repo, dir.path(), 20);
    let d = dataset_from_snapshots(&[snap], &IngestConfig::default(), &DatasetBuildConfig::default()).unwrap();
    assert_eq!(d.notes.len(), 5);
    assert_eq!(d.links.len(), 150);
    assert_eq!(d.build_manifest.counts.draft_releases_excluded, 1);
    assert_eq!(d.artifacts.len(), 150);

    let mut oracle = BTreeMap::new();
    for ((seg, _), key) in d.truth() {
        oracle.entry(seg).or_insert_with(BTreeSet::new).insert(key);
    }
    let cfg = ScoringConfig::default();
    let rec = recover(&d, &ArtifactKind::ALL, &cfg, &Oracle(oracle), 0).unwrap();
    assert_eq!(rec.results.len(), 150);
    assert!(rec.results.iter().all(|r| r.rank_of_truth == Some(1)));

    let tf = recover(&d, &ArtifactKind::ALL, &cfg, &TfIdfScorer, 0).unwrap();
    let method = MethodInfo {
        label: "tfidf+time".into(),
        scorer: "tfidf".into(),
        alpha: cfg.alpha,
        window_days: cfg.window_days,
    };
    let m = run_manifest(&d, method.clone(), &cfg, "h".into(), None, &tf);
    let out = tempfile::tempdir().unwrap();
    write_predictions(out.path(), &tf.results, &m).unwrap();
    let back = read_predictions(out.path()).unwrap();
    assert_eq!(back.results, tf.results);
    let rep = compare_report(&[MethodRun { method, manifest: Some(m), results: tf.results }]).unwrap();
    assert_eq!(rep.rows.len(), 3);
    for row in &rep.rows {
        assert!(row.precision_at_1 <= row.mrr + 1e-12);
    }
    assert_eq!(cards_from_links(&d).unwrap().len(), 50);
}

#[test]
fn replay_matches_recording() {
    let repo = SynthRepo::generate(SynthSpec { seed: 3, ..SynthSpec::default() });
    let dir = tempfile::tempdir().unwrap();
    let snap = snapshot_of(&repo, dir.path(), 7);
    assert!(!snap.is_live());
    let a = replay_snapshot(&snap, &IngestConfig::default()).unwrap();
    let b = replay_snapshot(&snap, &IngestConfig::default()).unwrap();
    assert_eq!(a, b);
    let data = a.data.unwrap();
    assert_eq!(data.releases.len(), 5);
    assert_eq!(data.artifacts.len(), 150);
    assert_eq!(data.stats.unwrap(), repo.stats);
}

#[test]
fn ineligible_repo_is_not_snapshotted() {
    let mut repo = SynthRepo::generate(SynthSpec::default());
    repo.stats.forks = 999;
    let dir = tempfile::tempdir().unwrap();
    let cfg = IngestConfig {
        snapshot_dir: dir.path().to_path_buf(),
        ..IngestConfig::default()
    };
    let out = ingest_to_snapshot(&repo.transport(100), None, &repo.spec.repo, &cfg, repo.now, false).unwrap();
    assert_eq!(out.report.failed_ids(), vec![2]);
    assert!(out.snapshot_id.is_none());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}
