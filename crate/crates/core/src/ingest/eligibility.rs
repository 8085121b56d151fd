use chrono::Months;
use serde::{Deserialize, Serialize};

use crate::model::Timestamp;

pub const MIN_AGE_YEARS: u32 = 3;
pub const ACTIVITY_WINDOW_DAYS: i64 = 90;
pub const MIN_FORKS: u64 = 1_000;
pub const MIN_STARS: u64 = 8_000;
pub const MIN_CONTRIBUTORS: u64 = 30;
pub const MIN_COMMITS: u64 = 2_000;
pub const MIN_RESOLVED_ISSUES: u64 = 500;
pub const MIN_MERGED_PRS: u64 = 500;
pub const MIN_RELEASES: u64 = 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoStats {
    pub created_at: Timestamp,
    /// At least one default-branch commit in the 90 days before the check.
    pub is_active: bool,
    pub forks: u64,
    pub stars: u64,
    pub contributors: u64,
    pub commits: u64,
    pub resolved_issues: u64,
    pub merged_prs: u64,
    pub published_releases: u64,
}

/// Activity test applied to the latest default-branch commit date.
pub fn is_active(last_commit: Option<Timestamp>, now: Timestamp) -> bool {
    last_commit.is_some_and(|t| t >= now.plus_days(-ACTIVITY_WINDOW_DAYS))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EligibilityReport {
    pub criteria: Vec<Criterion>,
}

impl EligibilityReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn failed_ids(&self) -> Vec<u8> {
        self.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.criteria {
            out.push_str(&format!(
                "({}) {:<34} {:<4} {}\n",
                c.id,
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.detail
            ));
        }
        out.push_str(if self.passed() { "eligible\n" } else { "not eligible\n" });
        out
    }
}

/// Applies the seven repository-selection thresholds.
pub fn check_eligibility(stats: &RepoStats, now: Timestamp) -> EligibilityReport {
    let cutoff = now
        .as_datetime()
        .checked_sub_months(Months::new(12 * MIN_AGE_YEARS))
        .map(Timestamp::from)
        .unwrap_or(now);
    let old_enough = stats.created_at <= cutoff;
    let mut criteria = vec![Criterion {
        id: 1,
        name: "created >= 3 years ago and active".into(),
        passed: old_enough && stats.is_active,
        detail: format!("created {}, active {}", stats.created_at, stats.is_active),
    }];
    criteria.push(Criterion {
        id: 2,
        name: format!(">= {MIN_FORKS} forks and >= {MIN_STARS} stars"),
        passed: stats.forks >= MIN_FORKS && stats.stars >= MIN_STARS,
        detail: format!("{} forks, {} stars", stats.forks, stats.stars),
    });
    let simple = [
        (3, "contributors", stats.contributors, MIN_CONTRIBUTORS),
        (4, "commits", stats.commits, MIN_COMMITS),
        (5, "resolved issues", stats.resolved_issues, MIN_RESOLVED_ISSUES),
        (6, "merged pull requests", stats.merged_prs, MIN_MERGED_PRS),
        (7, "published releases", stats.published_releases, MIN_RELEASES),
    ];
    for (id, what, value, min) in simple {
        criteria.push(Criterion {
            id,
            name: format!(">= {min} {what}"),
            passed: value >= min,
            detail: value.to_string(),
        });
    }
    EligibilityReport { criteria }
}
