//! Shared domain types: repositories, release notes, artifacts, and links.
//!
//! Every type here is an immutable value once built. Timestamps are kept in
//! UTC at second precision so that records fetched from the hosting API,
//! parsed from snapshots, and re-read from a dataset export compare equal.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ModelError;

/// A UTC instant truncated to whole seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(DateTime<Utc>);

impl Timestamp {
    pub fn from_unix(secs: i64) -> Self {
        Timestamp(
            Utc.timestamp_opt(secs, 0)
                .single()
                .expect("unix seconds within chrono range"),
        )
    }

    pub fn parse(s: &str) -> Result<Self, ModelError> {
        DateTime::parse_from_rfc3339(s)
            .map(|dt| Self::from(dt.with_timezone(&Utc)))
            .map_err(|e| ModelError::Timestamp(format!("{s:?}: {e}")))
    }

    pub fn unix(&self) -> i64 {
        self.0.timestamp()
    }

    pub fn as_datetime(&self) -> DateTime<Utc> {
        self.0
    }

    /// Signed distance `self - other` in fractional days.
    pub fn days_since(&self, other: Timestamp) -> f64 {
        (self.unix() - other.unix()) as f64 / 86_400.0
    }

    pub fn plus_days(&self, days: i64) -> Timestamp {
        Timestamp::from_unix(self.unix() + days * 86_400)
    }
}

impl From<DateTime<Utc>> for Timestamp {
    fn from(dt: DateTime<Utc>) -> Self {
        Timestamp::from_unix(dt.timestamp())
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.to_rfc3339_opts(SecondsFormat::Secs, true))
    }
}

impl FromStr for Timestamp {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Timestamp::parse(s)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Timestamp::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A repository on a hosting platform.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RepoRef {
    pub host: String,
    pub owner: String,
    pub name: String,
}

impl RepoRef {
    pub fn new(host: &str, owner: &str, name: &str) -> Result<Self, ModelError> {
        if owner.is_empty() || name.is_empty() {
            return Err(ModelError::InvalidRepo(format!("{owner}/{name}")));
        }
        let host = if host.is_empty() { "github.com" } else { host };
        Ok(RepoRef {
            host: host.to_ascii_lowercase(),
            owner: owner.to_string(),
            name: name.to_string(),
        })
    }

    pub fn github(owner: &str, name: &str) -> Result<Self, ModelError> {
        Self::new("github.com", owner, name)
    }

    /// Parses `owner/name` or `host/owner/name`.
    pub fn parse(spec: &str) -> Result<Self, ModelError> {
        let parts: Vec<&str> = spec.trim().trim_matches('/').split('/').collect();
        match parts.as_slice() {
            [owner, name] => Self::github(owner, name),
            [host, owner, name] => Self::new(host, owner, name),
            _ => Err(ModelError::InvalidRepo(spec.to_string())),
        }
    }

    /// Platforms treat owner and name case-insensitively.
    pub fn same_repo(&self, other: &RepoRef) -> bool {
        self.host.eq_ignore_ascii_case(&other.host)
            && self.owner.eq_ignore_ascii_case(&other.owner)
            && self.name.eq_ignore_ascii_case(&other.name)
    }

    /// Directory name used by snapshots: `<owner>__<name>`.
    pub fn slug(&self) -> String {
        format!("{}__{}", self.owner, self.name)
    }
}

impl fmt::Display for RepoRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.host, self.owner, self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    PullRequest,
    Commit,
    Issue,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 3] = [
        ArtifactKind::PullRequest,
        ArtifactKind::Commit,
        ArtifactKind::Issue,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ArtifactKind::PullRequest => "pull_request",
            ArtifactKind::Commit => "commit",
            ArtifactKind::Issue => "issue",
        }
    }

    /// Human label used in prompts and reports.
    pub fn label(&self) -> &'static str {
        match self {
            ArtifactKind::PullRequest => "pull request",
            ArtifactKind::Commit => "commit",
            ArtifactKind::Issue => "issue",
        }
    }
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArtifactKind {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pull_request" | "pr" | "pull" => Ok(ArtifactKind::PullRequest),
            "commit" => Ok(ArtifactKind::Commit),
            "issue" => Ok(ArtifactKind::Issue),
            other => Err(ModelError::InvalidKind(other.to_string())),
        }
    }
}

/// Content category of a segment. Metadata only; nothing assigns it automatically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Feature,
    Bugfix,
    Docs,
    Other,
}

/// Positional identity of a segment: `(repo, tag, ordinal)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SegmentId {
    pub repo: RepoRef,
    pub tag: String,
    pub ordinal: usize,
}

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}#{}", self.repo, self.tag, self.ordinal)
    }
}

/// Byte range `[start, end)` into a release-note body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ByteSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteSegment {
    pub id: SegmentId,
    pub text: String,
    pub raw_span: ByteSpan,
    pub embedded_links: Vec<String>,
    pub category: Option<Category>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseNote {
    pub repo: RepoRef,
    pub tag: String,
    pub release_date: Timestamp,
    pub body: String,
    pub segments: Vec<NoteSegment>,
}

impl ReleaseNote {
    /// Segments `body` and attaches the positional ids.
    pub fn segmented(repo: RepoRef, tag: &str, release_date: Timestamp, body: &str) -> Self {
        let segments = crate::notes::segment::segment_body(body)
            .into_iter()
            .enumerate()
            .map(|(ordinal, raw)| NoteSegment {
                id: SegmentId {
                    repo: repo.clone(),
                    tag: tag.to_string(),
                    ordinal,
                },
                text: raw.text,
                raw_span: raw.raw_span,
                embedded_links: raw.embedded_links,
                category: None,
            })
            .collect();
        ReleaseNote {
            repo,
            tag: tag.to_string(),
            release_date,
            body: body.to_string(),
            segments,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub kind: ArtifactKind,
    pub repo: RepoRef,
    pub key: String,
    pub text: String,
    pub event_date: Timestamp,
    pub url: String,
}

impl Artifact {
    /// Validates the key format against the kind: decimal for pull requests
    /// and issues, 7 to 40 hex digits for commits.
    pub fn new(
        kind: ArtifactKind,
        repo: RepoRef,
        key: impl Into<String>,
        text: impl Into<String>,
        event_date: Timestamp,
        url: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let key = key.into();
        let ok = match kind {
            ArtifactKind::PullRequest | ArtifactKind::Issue => {
                !key.is_empty() && key.bytes().all(|b| b.is_ascii_digit())
            }
            ArtifactKind::Commit => {
                (7..=40).contains(&key.len()) && key.bytes().all(|b| b.is_ascii_hexdigit())
            }
        };
        if !ok {
            return Err(ModelError::InvalidKey { kind, key });
        }
        Ok(Artifact {
            kind,
            repo,
            key,
            text: text.into(),
            event_date,
            url: url.into(),
        })
    }

    pub fn reference(&self) -> ArtifactRef {
        ArtifactRef {
            kind: self.kind,
            repo: self.repo.clone(),
            key: self.key.clone(),
        }
    }
}

/// Merge date for pull requests, commit date for commits, closure date for issues.
pub fn artifact_date(a: &Artifact) -> Timestamp {
    a.event_date
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub kind: ArtifactKind,
    pub repo: RepoRef,
    pub key: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ExplicitHyperlink,
    Recovered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkStatus {
    Valid,
    Broken,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceLink {
    pub segment: SegmentId,
    pub artifact: ArtifactRef,
    pub provenance: Provenance,
    pub status: LinkStatus,
}

/// Orders artifact keys: numerically when both are decimal, else lexically.
pub fn compare_keys(a: &str, b: &str) -> Ordering {
    let numeric = |s: &str| !s.is_empty() && s.bytes().all(|c| c.is_ascii_digit());
    if numeric(a) && numeric(b) {
        let (a, b) = (a.trim_start_matches('0'), b.trim_start_matches('0'));
        a.len().cmp(&b.len()).then_with(|| a.cmp(b))
    } else {
        a.cmp(b)
    }
}
