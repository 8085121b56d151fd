//! GitHub REST ingestion: releases, merged pull requests, default-branch
//! commits, and closed issues, cached in a replayable snapshot.
//!
//! Every request goes through an [`HttpTransport`]. Live runs wrap
//! [`LiveTransport`] in a [`RecordingTransport`]; offline runs read a
//! [`Snapshot`]. Both feed the same [`GitHubClient`], so replayed results
//! match the recorded ones.

mod client;
mod eligibility;
mod http;
mod ratelimit;
mod snapshot;

use std::path::PathBuf;
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::IngestError;

pub use client::{api_base, collect_repo, GitHubClient, RepoData, COMMIT_MESSAGE_MAX_LINES};
pub use eligibility::{
    check_eligibility, is_active, Criterion, EligibilityReport, RepoStats, ACTIVITY_WINDOW_DAYS,
    MIN_AGE_YEARS, MIN_COMMITS, MIN_CONTRIBUTORS, MIN_FORKS, MIN_MERGED_PRS, MIN_RELEASES,
    MIN_RESOLVED_ISSUES, MIN_STARS,
};
pub use http::{parse_link_header, HttpTransport, LiveTransport, RawResponse, StaticTransport};
pub use ratelimit::TokenBucket;
pub use snapshot::{
    list_snapshots, load_snapshot, load_snapshot_dir, repo_dir, IndexEntry, RecordingTransport,
    Snapshot, SnapshotId, SnapshotIndex, SnapshotWriter, INDEX_FILE,
};

/// Manifest note recorded with every snapshot.
pub const DEFAULT_BRANCH_NOTE: &str = "commits listed from the default branch only";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub token_env_var: String,
    pub max_requests_per_hour: u32,
    pub page_size: u32,
    pub snapshot_dir: PathBuf,
    /// Retries per request on rate limiting, 5xx, or transport errors.
    pub retry_budget: u32,
    pub max_in_flight: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            token_env_var: "GITHUB_TOKEN".into(),
            max_requests_per_hour: 5_000,
            page_size: 100,
            snapshot_dir: PathBuf::from("snapshots"),
            retry_budget: 5,
            max_in_flight: 4,
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        if !(1..=100).contains(&self.page_size) {
            return Err(IngestError::Config(format!(
                "page_size must be in [1, 100], got {}",
                self.page_size
            )));
        }
        if self.max_requests_per_hour == 0 {
            return Err(IngestError::Config("max_requests_per_hour must be positive".into()));
        }
        if self.max_in_flight == 0 {
            return Err(IngestError::Config("max_in_flight must be positive".into()));
        }
        Ok(())
    }

    /// Reads the token from the configured environment variable.
    pub fn token(&self) -> Option<String> {
        std::env::var(&self.token_env_var).ok().filter(|t| !t.trim().is_empty())
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
pub struct InFlight {
    max: usize,
    used: Mutex<usize>,
    cv: Condvar,
}

impl InFlight {
    pub fn new(max: usize) -> Self {
        InFlight {
            max: max.max(1),
            used: Mutex::new(0),
            cv: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> InFlightGuard<'_> {
        let mut used = self.used.lock().unwrap();
        while *used >= self.max {
            used = self.cv.wait(used).unwrap();
        }
        *used += 1;
        InFlightGuard { sem: self }
    }
}

pub struct InFlightGuard<'a> {
    sem: &'a InFlight,
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.sem.used.lock().unwrap() -= 1;
        self.sem.cv.notify_one();
    }
}
