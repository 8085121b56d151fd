//! The ground-truth dataset and its on-disk directory layout.
//!
//! A dataset directory holds four files:
//!
//! | file             | content                                  |
//! |------------------|------------------------------------------|
//! | `notes.jsonl`    | one [`ReleaseNote`] per line, segments inline |
//! | `artifacts.jsonl`| one [`Artifact`] per line                |
//! | `links.jsonl`    | one [`TraceLink`] per line               |
//! | `manifest.json`  | the [`BuildManifest`]                    |
//!
//! Field names are snake_case and timestamps are RFC 3339 in UTC.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::DatasetError;
use crate::model::{
    Artifact, ArtifactKind, ArtifactRef, LinkStatus, NoteSegment, ReleaseNote, RepoRef, SegmentId,
    Timestamp, TraceLink,
};
use crate::notes::DatasetBuildConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const NOTES_FILE: &str = "notes.jsonl";
pub const ARTIFACTS_FILE: &str = "artifacts.jsonl";
pub const LINKS_FILE: &str = "links.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Why a labeled reference did not become a valid link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// Labeled kind and key, but no fetched artifact matches.
    MissingArtifact,
    /// A short hash matched more than one fetched commit.
    AmbiguousHash,
    /// Points at a different repository.
    CrossRepository,
    /// A later link of a kind already linked from the same segment.
    Duplicate,
    /// Past the `max_links` cap.
    OverCap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedLink {
    pub segment: SegmentId,
    pub reference: String,
    pub kind: Option<ArtifactKind>,
    pub key: Option<String>,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildCounts {
    pub notes_in: usize,
    pub notes_kept: usize,
    pub draft_releases_excluded: usize,
    pub changelog_only_notes: usize,
    pub linkless_notes_dropped: usize,
    pub segments: usize,
    pub references_seen: usize,
    pub unlabeled_references: usize,
    pub valid_links: usize,
    pub broken_links: usize,
    pub cross_repo_links: usize,
    pub deduped_links: usize,
    pub capped_links: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildManifest {
    pub schema_version: u32,
    pub tool_version: String,
    /// Derived from the source data, never from the wall clock, so rebuilds are byte-identical.
    pub built_at: Timestamp,
    pub source_snapshots: Vec<String>,
    pub config: DatasetBuildConfig,
    /// Filters and assumptions applied while building, in application order.
    pub filters: Vec<String>,
    pub counts: BuildCounts,
    pub dropped: Vec<DroppedLink>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub repos: Vec<RepoRef>,
    pub notes: Vec<ReleaseNote>,
    pub artifacts: Vec<Artifact>,
    pub links: Vec<TraceLink>,
    pub build_manifest: BuildManifest,
}

impl Dataset {
    pub fn segment(&self, id: &SegmentId) -> Option<&NoteSegment> {
        self.notes
            .iter()
            .find(|n| n.repo == id.repo && n.tag == id.tag)
            .and_then(|n| n.segments.get(id.ordinal))
            .filter(|s| s.id == *id)
    }

    pub fn note_of(&self, id: &SegmentId) -> Option<&ReleaseNote> {
        self.notes
            .iter()
            .find(|n| n.repo == id.repo && n.tag == id.tag)
    }

    pub fn artifact_index(&self) -> HashMap<ArtifactRef, &Artifact> {
        self.artifacts.iter().map(|a| (a.reference(), a)).collect()
    }

    pub fn find_artifact(&self, r: &ArtifactRef) -> Option<&Artifact> {
        self.artifacts
            .iter()
            .find(|a| a.kind == r.kind && a.key == r.key && a.repo == r.repo)
    }

    /// Valid links grouped as `(segment, kind) -> artifact key`.
    pub fn truth(&self) -> BTreeMap<(SegmentId, ArtifactKind), String> {
        self.links
            .iter()
            .filter(|l| l.status == LinkStatus::Valid)
            .map(|l| ((l.segment.clone(), l.artifact.kind), l.artifact.key.clone()))
            .collect()
    }

    /// Checks referential integrity, link uniqueness, and artifact key uniqueness.
    pub fn check_integrity(&self) -> Result<(), DatasetError> {
        let mut seen_artifacts = HashSet::new();
        for a in &self.artifacts {
            if !seen_artifacts.insert((a.repo.clone(), a.kind, a.key.clone())) {
                return Err(DatasetError::Integrity(format!(
                    "duplicate artifact {} {} in {}",
                    a.kind, a.key, a.repo
                )));
            }
        }
        let mut tags = HashSet::new();
        for n in &self.notes {
            if !tags.insert((n.repo.clone(), n.tag.clone())) {
                return Err(DatasetError::Integrity(format!(
                    "duplicate tag {} in {}",
                    n.tag, n.repo
                )));
            }
            for (i, s) in n.segments.iter().enumerate() {
                if s.id.ordinal != i || s.id.tag != n.tag || s.id.repo != n.repo {
                    return Err(DatasetError::Integrity(format!(
                        "segment {} is not at position {i} of its note",
                        s.id
                    )));
                }
            }
        }
        let mut seen_links = HashSet::new();
        let mut valid_per_kind = HashSet::new();
        for l in &self.links {
            if !seen_links.insert(l) {
                return Err(DatasetError::Integrity(format!(
                    "duplicate link {} -> {} {}",
                    l.segment, l.artifact.kind, l.artifact.key
                )));
            }
            if self.segment(&l.segment).is_none() {
                return Err(DatasetError::Integrity(format!(
                    "link references unknown segment {}",
                    l.segment
                )));
            }
            if l.status == LinkStatus::Valid {
                if !seen_artifacts.contains(&(
                    l.artifact.repo.clone(),
                    l.artifact.kind,
                    l.artifact.key.clone(),
                )) {
                    return Err(DatasetError::Integrity(format!(
                        "valid link to unknown artifact {} {}",
                        l.artifact.kind, l.artifact.key
                    )));
                }
                if !valid_per_kind.insert((l.segment.clone(), l.artifact.kind)) {
                    return Err(DatasetError::Integrity(format!(
                        "more than one valid {} link for {}",
                        l.artifact.kind, l.segment
                    )));
                }
            }
        }
        Ok(())
    }
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), DatasetError> {
    let file = fs::File::create(path).map_err(|e| DatasetError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("dataset records serialize");
        writeln!(w, "{line}").map_err(|e| DatasetError::io(path, e))?;
    }
    w.flush().map_err(|e| DatasetError::io(path, e))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = fs::File::open(path).map_err(|e| DatasetError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| DatasetError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn export_dataset(d: &Dataset, dir: &Path) -> Result<(), DatasetError> {
    fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
    write_jsonl(&dir.join(NOTES_FILE), &d.notes)?;
    write_jsonl(&dir.join(ARTIFACTS_FILE), &d.artifacts)?;
    write_jsonl(&dir.join(LINKS_FILE), &d.links)?;

    #[derive(Serialize)]
    struct ManifestFile<'a> {
        repos: &'a [RepoRef],
        #[serde(flatten)]
        manifest: &'a BuildManifest,
    }
    let path = dir.join(MANIFEST_FILE);
    let body = serde_json::to_string_pretty(&ManifestFile {
        repos: &d.repos,
        manifest: &d.build_manifest,
    })
    .expect("manifest serializes");
    fs::write(&path, body + "\n").map_err(|e| DatasetError::io(&path, e))
}

pub fn import_dataset(dir: &Path) -> Result<Dataset, DatasetError> {
    let path = dir.join(MANIFEST_FILE);
    let raw = fs::read_to_string(&path).map_err(|e| DatasetError::io(&path, e))?;
    let value: serde_json::Value = serde_json::from_str(&raw).map_err(|e| DatasetError::Parse {
        path: path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(DatasetError::SchemaVersionMismatch {
            found,
            expected: SCHEMA_VERSION,
        });
    }

    #[derive(Deserialize)]
    struct ManifestFile {
        repos: Vec<RepoRef>,
        #[serde(flatten)]
        manifest: BuildManifest,
    }
    let mf: ManifestFile = serde_json::from_value(value).map_err(|e| DatasetError::Parse {
        path: path.clone(),
        line: 0,
        message: e.to_string(),
    })?;
    Ok(Dataset {
        repos: mf.repos,
        notes: read_jsonl(&dir.join(NOTES_FILE))?,
        artifacts: read_jsonl(&dir.join(ARTIFACTS_FILE))?,
        links: read_jsonl(&dir.join(LINKS_FILE))?,
        build_manifest: mf.manifest,
    })
}
