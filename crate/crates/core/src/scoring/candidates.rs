use serde::{Deserialize, Serialize};

use crate::model::{compare_keys, Artifact, ArtifactKind, ReleaseNote, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolMode {
    /// From the previous release (less slack) to this release (plus slack).
    BetweenReleases,
    /// A fixed number of days before the release (plus slack after it).
    FixedWindow,
}

/// Which artifacts are considered for a release.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePolicy {
    pub mode: PoolMode,
    pub slack_days: u32,
    pub fixed_window_days: u32,
}

impl Default for CandidatePolicy {
    fn default() -> Self {
        CandidatePolicy {
            mode: PoolMode::BetweenReleases,
            slack_days: 7,
            fixed_window_days: 90,
        }
    }
}

impl CandidatePolicy {
    /// Inclusive date bounds of the pool.
    pub fn bounds(&self, release_date: Timestamp, previous: Option<Timestamp>) -> (Timestamp, Timestamp) {
        let slack = i64::from(self.slack_days);
        let upper = release_date.plus_days(slack);
        let lower = match (self.mode, previous) {
            (PoolMode::BetweenReleases, Some(prev)) => prev.plus_days(-slack),
            _ => release_date.plus_days(-i64::from(self.fixed_window_days)),
        };
        (lower, upper)
    }
}

/// Artifacts of `kind` from the release's repository whose event date falls
/// in the policy window, ordered by event date then key.
pub fn generate_candidates<'a>(
    release: &ReleaseNote,
    previous_release_date: Option<Timestamp>,
    artifacts: &'a [Artifact],
    kind: ArtifactKind,
    policy: &CandidatePolicy,
) -> Vec<&'a Artifact> {
    let (lo, hi) = policy.bounds(release.release_date, previous_release_date);
    let mut pool: Vec<&Artifact> = artifacts
        .iter()
        .filter(|a| a.kind == kind && a.repo == release.repo)
        .filter(|a| a.event_date >= lo && a.event_date <= hi)
        .collect();
    pool.sort_by(|a, b| {
        a.event_date
            .cmp(&b.event_date)
            .then_with(|| compare_keys(&a.key, &b.key))
    });
    pool
}

/// Release date of the release published just before `release` in the same repository.
pub fn previous_release_date(release: &ReleaseNote, releases: &[ReleaseNote]) -> Option<Timestamp> {
    releases
        .iter()
        .filter(|r| r.repo == release.repo && r.release_date < release.release_date)
        .map(|r| r.release_date)
        .max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RepoRef;

    fn day(d: i64) -> Timestamp {
        Timestamp::from_unix(1_600_000_000 + d * 86_400)
    }

    fn repo() -> RepoRef {
        RepoRef::github("o", "r").unwrap()
    }

    fn pr(key: &str, d: i64) -> Artifact {
        Artifact::new(ArtifactKind::PullRequest, repo(), key, "t", day(d), "u").unwrap()
    }

    fn release(d: i64) -> ReleaseNote {
        ReleaseNote::segmented(repo(), &format!("v{d}"), day(d), "")
    }

    #[test]
    fn between_releases_includes_interval() {
        let arts = vec![pr("1", 15)];
        let pool = generate_candidates(&release(20), Some(day(0)), &arts, ArtifactKind::PullRequest, &CandidatePolicy::default());
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn fixed_window_reaches_back() {
        let arts = vec![pr("1", -40)];
        let policy = CandidatePolicy {
            mode: PoolMode::FixedWindow,
            ..Default::default()
        };
        let pool = generate_candidates(&release(0), Some(day(-5)), &arts, ArtifactKind::PullRequest, &policy);
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn after_release_plus_slack_is_excluded() {
        let arts = vec![pr("1", 28), pr("2", 27)];
        let pool = generate_candidates(&release(20), Some(day(0)), &arts, ArtifactKind::PullRequest, &CandidatePolicy::default());
        assert_eq!(pool.iter().map(|a| a.key.as_str()).collect::<Vec<_>>(), ["2"]);
    }

    #[test]
    fn first_release_uses_fixed_window_and_orders_by_date() {
        let arts = vec![pr("3", -10), pr("1", -91), pr("2", -90), pr("10", -10)];
        let pool = generate_candidates(&release(0), None, &arts, ArtifactKind::PullRequest, &CandidatePolicy::default());
        assert_eq!(pool.iter().map(|a| a.key.as_str()).collect::<Vec<_>>(), ["2", "3", "10"]);
    }

    #[test]
    fn other_kinds_and_repos_are_skipped() {
        let mut other = pr("1", 1);
        other.repo = RepoRef::github("x", "y").unwrap();
        let commit = Artifact::new(ArtifactKind::Commit, repo(), "abcdef1", "t", day(1), "u").unwrap();
        let arts = vec![other, commit];
        assert!(generate_candidates(&release(2), None, &arts, ArtifactKind::PullRequest, &CandidatePolicy::default()).is_empty());
    }

    #[test]
    fn previous_release_lookup() {
        let rs = vec![release(0), release(20), release(40)];
        assert_eq!(previous_release_date(&rs[2], &rs), Some(day(20)));
        assert_eq!(previous_release_date(&rs[0], &rs), None);
    }
}
