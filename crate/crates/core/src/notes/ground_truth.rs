use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    BuildCounts, BuildManifest, Dataset, DropReason, DroppedLink, SCHEMA_VERSION, TOOL_VERSION,
};
use crate::error::DatasetError;
use crate::model::{
    Artifact, ArtifactKind, ArtifactRef, LinkStatus, Provenance, ReleaseNote, RepoRef, SegmentId,
    Timestamp, TraceLink,
};
use crate::notes::links::{classify_link, LinkKind};

static CHANGELOG_ONLY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*(?:\*\*|__)?full changelog(?:\*\*|__)?\s*:?\s*(?:\*\*|__)?\s*:?\s*\S+\s*$")
        .unwrap()
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupePolicy {
    #[default]
    FirstWins,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetBuildConfig {
    pub drop_linkless_notes: bool,
    pub validate_links: bool,
    pub max_links: usize,
    pub dedupe_policy: DedupePolicy,
}

impl Default for DatasetBuildConfig {
    fn default() -> Self {
        DatasetBuildConfig {
            drop_linkless_notes: true,
            validate_links: true,
            max_links: 3_500,
            dedupe_policy: DedupePolicy::FirstWins,
        }
    }
}

/// Provenance details recorded in the manifest alongside the link counts.
#[derive(Debug, Clone, Default)]
pub struct BuildContext {
    /// Defaults to the latest release or artifact date in the input.
    pub built_at: Option<Timestamp>,
    pub source_snapshots: Vec<String>,
    pub draft_releases_excluded: usize,
    /// Filters applied upstream (during ingest), recorded first.
    pub upstream_filters: Vec<String>,
}

/// True for bodies consisting of nothing but an auto-generated compare link.
pub fn is_changelog_only(body: &str) -> bool {
    CHANGELOG_ONLY.is_match(body)
}

fn repo_key(r: &RepoRef) -> (String, String, String) {
    (
        r.host.to_ascii_lowercase(),
        r.owner.to_ascii_lowercase(),
        r.name.to_ascii_lowercase(),
    )
}

/// Lookup tables over the fetched artifacts of one repository.
#[derive(Default)]
struct RepoArtifacts {
    pulls: HashSet<String>,
    issues: HashSet<String>,
    commits: Vec<String>,
}

enum Resolution {
    Valid(ArtifactKind, String),
    Broken(Option<ArtifactKind>, Option<String>, DropReason),
    Unlabeled,
}

impl RepoArtifacts {
    fn commit_by_prefix(&self, prefix: &str) -> Result<&str, DropReason> {
        let start = self.commits.partition_point(|h| h.as_str() < prefix);
        let mut hits = self.commits[start..]
            .iter()
            .take_while(|h| h.starts_with(prefix));
        match (hits.next(), hits.next()) {
            (Some(h), None) => Ok(h),
            (None, _) => Err(DropReason::MissingArtifact),
            (Some(_), Some(_)) => Err(DropReason::AmbiguousHash),
        }
    }

    fn resolve(&self, reference: &str, repo: &RepoRef, validate: bool) -> Resolution {
        let label = classify_link(reference, repo);
        let (Some(kind), Some(key)) = (label.kind, label.key) else {
            return Resolution::Unlabeled;
        };
        if label.cross_repo {
            return Resolution::Broken(kind.artifact_kind(), Some(key), DropReason::CrossRepository);
        }
        let numbered = |k: ArtifactKind, set: &HashSet<String>| {
            if !validate || set.contains(&key) {
                Resolution::Valid(k, key.clone())
            } else {
                Resolution::Broken(Some(k), Some(key.clone()), DropReason::MissingArtifact)
            }
        };
        match kind {
            LinkKind::PullRequest => numbered(ArtifactKind::PullRequest, &self.pulls),
            // GitHub redirects /issues/N to /pull/N when N is a pull request
            LinkKind::Issue if validate && !self.issues.contains(&key) && self.pulls.contains(&key) => {
                Resolution::Valid(ArtifactKind::PullRequest, key)
            }
            LinkKind::Issue => numbered(ArtifactKind::Issue, &self.issues),
            LinkKind::UnresolvedNumber => {
                if self.pulls.contains(&key) {
                    Resolution::Valid(ArtifactKind::PullRequest, key)
                } else if self.issues.contains(&key) {
                    Resolution::Valid(ArtifactKind::Issue, key)
                } else {
                    Resolution::Broken(None, Some(key), DropReason::MissingArtifact)
                }
            }
            LinkKind::Commit if !validate => Resolution::Valid(ArtifactKind::Commit, key),
            LinkKind::Commit | LinkKind::CommitCandidate => match self.commit_by_prefix(&key) {
                Ok(full) => Resolution::Valid(ArtifactKind::Commit, full.to_string()),
                Err(reason) => Resolution::Broken(Some(ArtifactKind::Commit), Some(key), reason),
            },
        }
    }
}

pub fn build_ground_truth(
    notes: &[ReleaseNote],
    artifacts: &[Artifact],
    cfg: &DatasetBuildConfig,
) -> Result<Dataset, DatasetError> {
    build_ground_truth_with(notes, artifacts, cfg, &BuildContext::default())
}

/// Labels every embedded reference, validates it against `artifacts`, and
/// keeps at most one valid link per `(segment, kind)` in canonical
/// `(release_date, ordinal)` order, capped at `cfg.max_links`.
pub fn build_ground_truth_with(
    notes: &[ReleaseNote],
    artifacts: &[Artifact],
    cfg: &DatasetBuildConfig,
    ctx: &BuildContext,
) -> Result<Dataset, DatasetError> {
    if cfg.max_links == 0 {
        return Err(DatasetError::InconsistentInput(
            "max_links must be positive".into(),
        ));
    }

    // deterministic, deduplicated artifact list
    let mut sorted_artifacts: Vec<Artifact> = artifacts.to_vec();
    sorted_artifacts.sort_by(|a, b| {
        (&a.repo, a.kind, a.event_date)
            .cmp(&(&b.repo, b.kind, b.event_date))
            .then_with(|| crate::model::compare_keys(&a.key, &b.key))
    });
    let mut seen = HashSet::new();
    sorted_artifacts.retain(|a| seen.insert((repo_key(&a.repo), a.kind, a.key.clone())));

    let mut by_repo: HashMap<_, RepoArtifacts> = HashMap::new();
    for a in &sorted_artifacts {
        let entry = by_repo.entry(repo_key(&a.repo)).or_default();
        match a.kind {
            ArtifactKind::PullRequest => {
                entry.pulls.insert(a.key.clone());
            }
            ArtifactKind::Issue => {
                entry.issues.insert(a.key.clone());
            }
            ArtifactKind::Commit => entry.commits.push(a.key.to_ascii_lowercase()),
        }
    }
    for r in by_repo.values_mut() {
        r.commits.sort();
        r.commits.dedup();
    }

    let mut ordered: Vec<&ReleaseNote> = notes.iter().collect();
    ordered.sort_by(|a, b| (a.release_date, &a.repo, &a.tag).cmp(&(b.release_date, &b.repo, &b.tag)));
    let mut tags = HashSet::new();
    for n in &ordered {
        if !by_repo.contains_key(&repo_key(&n.repo)) {
            return Err(DatasetError::InconsistentInput(format!(
                "release {} of {} has no fetched artifacts for its repository",
                n.tag, n.repo
            )));
        }
        if !tags.insert((repo_key(&n.repo), n.tag.clone())) {
            return Err(DatasetError::InconsistentInput(format!(
                "duplicate tag {} in {}",
                n.tag, n.repo
            )));
        }
    }

    let mut counts = BuildCounts {
        notes_in: notes.len() + ctx.draft_releases_excluded,
        draft_releases_excluded: ctx.draft_releases_excluded,
        ..BuildCounts::default()
    };
    let mut dropped: Vec<DroppedLink> = Vec::new();
    let mut candidates: Vec<TraceLink> = Vec::new();

    for note in &ordered {
        counts.segments += note.segments.len();
        if is_changelog_only(&note.body) {
            counts.changelog_only_notes += 1;
            continue;
        }
        let lookup = &by_repo[&repo_key(&note.repo)];
        for seg in &note.segments {
            let mut linked_kinds: BTreeSet<ArtifactKind> = BTreeSet::new();
            for reference in &seg.embedded_links {
                counts.references_seen += 1;
                let drop = |kind, key, reason| DroppedLink {
                    segment: seg.id.clone(),
                    reference: reference.clone(),
                    kind,
                    key,
                    reason,
                };
                match lookup.resolve(reference, &note.repo, cfg.validate_links) {
                    Resolution::Unlabeled => counts.unlabeled_references += 1,
                    Resolution::Broken(kind, key, reason) => {
                        counts.broken_links += 1;
                        if reason == DropReason::CrossRepository {
                            counts.cross_repo_links += 1;
                        }
                        dropped.push(drop(kind, key, reason));
                    }
                    Resolution::Valid(kind, key) => {
                        if !linked_kinds.insert(kind) {
                            counts.deduped_links += 1;
                            dropped.push(drop(Some(kind), Some(key), DropReason::Duplicate));
                            continue;
                        }
                        candidates.push(TraceLink {
                            segment: seg.id.clone(),
                            artifact: ArtifactRef {
                                kind,
                                repo: note.repo.clone(),
                                key,
                            },
                            provenance: Provenance::ExplicitHyperlink,
                            status: LinkStatus::Valid,
                        });
                    }
                }
            }
        }
    }

    if candidates.len() > cfg.max_links {
        for l in candidates.split_off(cfg.max_links) {
            counts.capped_links += 1;
            dropped.push(DroppedLink {
                reference: format!("{} {}", l.artifact.kind, l.artifact.key),
                segment: l.segment,
                kind: Some(l.artifact.kind),
                key: Some(l.artifact.key),
                reason: DropReason::OverCap,
            });
        }
    }
    counts.valid_links = candidates.len();

    let linked_notes: HashSet<(RepoRef, String)> = candidates
        .iter()
        .map(|l| (l.segment.repo.clone(), l.segment.tag.clone()))
        .collect();
    let kept_notes: Vec<ReleaseNote> = ordered
        .iter()
        .filter(|n| !cfg.drop_linkless_notes || linked_notes.contains(&(n.repo.clone(), n.tag.clone())))
        .map(|n| (*n).clone())
        .collect();
    counts.notes_kept = kept_notes.len();
    counts.linkless_notes_dropped = ordered.len() - kept_notes.len();

    let mut repos: Vec<RepoRef> = kept_notes
        .iter()
        .map(|n| n.repo.clone())
        .chain(sorted_artifacts.iter().map(|a| a.repo.clone()))
        .collect();
    repos.sort();
    repos.dedup();

    let built_at = ctx.built_at.unwrap_or_else(|| {
        notes
            .iter()
            .map(|n| n.release_date)
            .chain(artifacts.iter().map(|a| a.event_date))
            .max()
            .unwrap_or(Timestamp::from_unix(0))
    });

    let mut filters = ctx.upstream_filters.clone();
    filters.push("notes consisting only of a \"Full Changelog\" compare link treated as linkless".into());
    filters.push("cross-repository links labeled broken".into());
    if cfg.validate_links {
        filters.push("links validated against fetched artifacts; missing or ambiguous targets labeled broken".into());
    } else {
        filters.push("link validation disabled: pull request, issue, and commit URLs kept unverified".into());
    }
    filters.push("at most one valid link per (segment, kind), first occurrence wins".into());
    filters.push(format!("valid links capped at {} in (release_date, ordinal) order", cfg.max_links));
    if cfg.drop_linkless_notes {
        filters.push("release notes without valid links dropped".into());
    }

    let dataset = Dataset {
        repos,
        notes: kept_notes,
        artifacts: sorted_artifacts,
        links: candidates,
        build_manifest: BuildManifest {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            built_at,
            source_snapshots: ctx.source_snapshots.clone(),
            config: cfg.clone(),
            filters,
            counts,
            dropped,
        },
    };
    if cfg.validate_links {
        dataset.check_integrity()?;
    }
    Ok(dataset)
}

/// Segment ids that are queries for `kind` in `d`.
pub fn queries_of_kind(d: &Dataset, kind: ArtifactKind) -> Vec<SegmentId> {
    d.links
        .iter()
        .filter(|l| l.status == LinkStatus::Valid && l.artifact.kind == kind)
        .map(|l| l.segment.clone())
        .collect()
}
