//! Replayable store of raw API responses.
//!
//! Layout: `<snapshot_dir>/<owner>__<name>/<sha256-of-url>.json`, one file
//! per response, plus `index.json` listing every entry with the sha256 of
//! its file. Loading verifies each checksum.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::TOOL_VERSION;
use crate::error::IngestError;
use crate::ingest::http::{HttpTransport, RawResponse};
use crate::model::{RepoRef, Timestamp};

pub const INDEX_FILE: &str = "index.json";

/// `<owner>__<name>@<first 16 hex digits of the index sha256>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SnapshotId(pub String);

impl fmt::Display for SnapshotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub url: String,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotIndex {
    pub repo: RepoRef,
    pub captured_at: Timestamp,
    pub tool_version: String,
    /// Listing page size; replays must request the same URLs.
    pub page_size: u32,
    /// Assumptions made while fetching, carried into dataset manifests.
    pub notes: Vec<String>,
    pub entries: Vec<IndexEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn repo_dir(snapshot_dir: &Path, repo: &RepoRef) -> PathBuf {
    snapshot_dir.join(repo.slug())
}

/// Collects responses for one repository; writes are serialized.
///
/// Files go to a `.partial` sibling directory that replaces the final one
/// only in [`SnapshotWriter::finish`]; an unfinished writer leaves any
/// earlier snapshot untouched.
pub struct SnapshotWriter {
    dir: PathBuf,
    final_dir: PathBuf,
    finished: bool,
    repo: RepoRef,
    page_size: u32,
    entries: Mutex<BTreeMap<String, IndexEntry>>,
}

impl SnapshotWriter {
    pub fn create(snapshot_dir: &Path, repo: &RepoRef, page_size: u32) -> Result<Self, IngestError> {
        let final_dir = repo_dir(snapshot_dir, repo);
        let dir = snapshot_dir.join(format!("{}.partial", repo.slug()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| IngestError::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| IngestError::io(&dir, e))?;
        Ok(SnapshotWriter {
            dir,
            final_dir,
            finished: false,
            repo: repo.clone(),
            page_size,
            entries: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn record(&self, resp: &RawResponse) -> Result<(), IngestError> {
        let file = format!("{}.json", sha256_hex(resp.url.as_bytes()));
        let bytes = serde_json::to_vec_pretty(resp).expect("responses serialize");
        let mut entries = self.entries.lock().unwrap();
        let path = self.dir.join(&file);
        fs::write(&path, &bytes).map_err(|e| IngestError::io(&path, e))?;
        entries.insert(
            resp.url.clone(),
            IndexEntry {
                url: resp.url.clone(),
                file,
                sha256: sha256_hex(&bytes),
            },
        );
        Ok(())
    }

    /// Writes the index and returns the snapshot id.
    pub fn finish(mut self, captured_at: Timestamp, notes: Vec<String>) -> Result<SnapshotId, IngestError> {
        let entries = std::mem::take(&mut *self.entries.lock().unwrap());
        let index = SnapshotIndex {
            repo: self.repo.clone(),
            captured_at,
            tool_version: TOOL_VERSION.to_string(),
            page_size: self.page_size,
            notes,
            entries: entries.into_values().collect(),
        };
        let bytes = serde_json::to_vec_pretty(&index).expect("index serializes");
        let path = self.dir.join(INDEX_FILE);
        fs::write(&path, &bytes).map_err(|e| IngestError::io(&path, e))?;
        if self.final_dir.exists() {
            fs::remove_dir_all(&self.final_dir).map_err(|e| IngestError::io(&self.final_dir, e))?;
        }
        fs::rename(&self.dir, &self.final_dir).map_err(|e| IngestError::io(&self.final_dir, e))?;
        self.finished = true;
        Ok(snapshot_id(&self.repo, &bytes))
    }
}

impl Drop for SnapshotWriter {
    fn drop(&mut self) {
        if !self.finished {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

fn snapshot_id(repo: &RepoRef, index_bytes: &[u8]) -> SnapshotId {
    SnapshotId(format!("{}@{}", repo.slug(), &sha256_hex(index_bytes)[..16]))
}

/// A loaded, checksum-verified snapshot. Serves as a replay transport.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub id: SnapshotId,
    pub index: SnapshotIndex,
    responses: BTreeMap<String, RawResponse>,
}

impl Snapshot {
    pub fn responses(&self) -> impl Iterator<Item = &RawResponse> {
        self.responses.values()
    }

    pub fn repo(&self) -> &RepoRef {
        &self.index.repo
    }
}

/// Loads the snapshot of `repo` under `snapshot_dir`.
pub fn load_snapshot(snapshot_dir: &Path, repo: &RepoRef) -> Result<Snapshot, IngestError> {
    load_snapshot_dir(&repo_dir(snapshot_dir, repo))
}

/// Loads a snapshot from its per-repository directory.
pub fn load_snapshot_dir(dir: &Path) -> Result<Snapshot, IngestError> {
    let index_path = dir.join(INDEX_FILE);
    let index_bytes = fs::read(&index_path).map_err(|e| IngestError::io(&index_path, e))?;
    let index: SnapshotIndex = serde_json::from_slice(&index_bytes)
        .map_err(|e| IngestError::SnapshotCorrupt(format!("{}: {e}", index_path.display())))?;
    let mut responses = BTreeMap::new();
    for entry in &index.entries {
        let path = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(|e| IngestError::io(&path, e))?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(IngestError::SnapshotCorrupt(format!(
                "checksum mismatch for {}",
                path.display()
            )));
        }
        let resp: RawResponse = serde_json::from_slice(&bytes)
            .map_err(|e| IngestError::SnapshotCorrupt(format!("{}: {e}", path.display())))?;
        if resp.url != entry.url {
            return Err(IngestError::SnapshotCorrupt(format!(
                "{} holds {} but is indexed as {}",
                path.display(),
                resp.url,
                entry.url
            )));
        }
        responses.insert(entry.url.clone(), resp);
    }
    Ok(Snapshot {
        id: snapshot_id(&index.repo, &index_bytes),
        index,
        responses,
    })
}

/// Per-repository snapshot directories under `snapshot_dir`, sorted.
pub fn list_snapshots(snapshot_dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let mut out = Vec::new();
    let rd = fs::read_dir(snapshot_dir).map_err(|e| IngestError::io(snapshot_dir, e))?;
    for entry in rd {
        let entry = entry.map_err(|e| IngestError::io(snapshot_dir, e))?;
        let p = entry.path();
        if p.join(INDEX_FILE).is_file() {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

impl HttpTransport for Snapshot {
    fn get(&self, url: &str, _token: Option<&str>) -> Result<RawResponse, IngestError> {
        self.responses
            .get(url)
            .cloned()
            .ok_or_else(|| IngestError::NotInSnapshot(url.to_string()))
    }

    fn is_live(&self) -> bool {
        false
    }
}

/// Passes requests to `inner` and records every response.
pub struct RecordingTransport<'a> {
    pub inner: &'a dyn HttpTransport,
    pub writer: &'a SnapshotWriter,
}

impl HttpTransport for RecordingTransport<'_> {
    fn get(&self, url: &str, token: Option<&str>) -> Result<RawResponse, IngestError> {
        let resp = self.inner.get(url, token)?;
        self.writer.record(&resp)?;
        Ok(resp)
    }

    fn is_live(&self) -> bool {
        self.inner.is_live()
    }
}
