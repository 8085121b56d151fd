//! Seeded synthetic repositories served as GitHub-shaped API responses.
//!
//! A [`SynthRepo`] holds releases whose notes link every change to its pull
//! request, commit, and issue, plus the noise a real listing contains:
//! a draft release, closed-unmerged pull requests, and pull requests in the
//! issue listing. [`SynthRepo::transport`] serves it page by page so the
//! regular ingest path can snapshot it.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::ingest::{api_base, RepoStats, StaticTransport};
use crate::model::{Artifact, ArtifactKind, RepoRef, Timestamp};

const WORDS: &[&str] = &[
    "cache", "parser", "schema", "migration", "cursor", "index", "query", "embedded", "entity",
    "column", "relation", "driver", "pool", "timeout", "logger", "config", "token", "session",
    "upload", "stream", "buffer", "socket", "router", "render", "layout", "theme", "button",
    "dialog", "locale", "plural", "encoder", "decoder", "archive", "export", "import", "search",
    "filter", "sorting", "paging", "webhook", "retry", "backoff", "metric", "tracing", "profile",
    "sandbox", "plugin", "loader", "bundle", "compiler", "linter", "format", "snapshot", "replica",
    "shard", "lock", "mutex", "channel", "worker", "scheduler",
];

const PREFIXES: &[&str] = &["feat", "fix", "perf", "refactor"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSpec {
    pub repo: RepoRef,
    pub seed: u64,
    pub releases: usize,
    pub changes_per_release: usize,
    /// Days between consecutive releases.
    pub cadence_days: i64,
    pub first_release: Timestamp,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            repo: RepoRef::github("acme", "widget").expect("valid repo"),
            seed: 7,
            releases: 5,
            changes_per_release: 10,
            cadence_days: 45,
            first_release: Timestamp::parse("2024-01-15T12:00:00Z").expect("valid timestamp"),
        }
    }
}

/// One release-note line and the three artifacts behind it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthChange {
    pub topic: String,
    pub pr: Artifact,
    pub commit: Artifact,
    pub issue: Artifact,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthRelease {
    pub id: u64,
    pub tag: String,
    pub date: Timestamp,
    pub body: String,
    pub changes: Vec<SynthChange>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthRepo {
    pub spec: SynthSpec,
    pub releases: Vec<SynthRelease>,
    /// Closed pull requests that were never merged.
    pub unmerged_prs: Vec<(u64, String, Timestamp)>,
    pub stats: RepoStats,
    /// Capture time: ten days after the last release.
    pub now: Timestamp,
}

fn commit_sha(seed: u64, i: usize, taken: &mut BTreeSet<String>) -> String {
    for salt in 0u32.. {
        let sha = hex::encode(Sha256::digest(format!("{seed}:{i}:{salt}")))[..40].to_string();
        let short = &sha[..7];
        let mixed = short.bytes().any(|b| b.is_ascii_digit()) && short.bytes().any(|b| b.is_ascii_alphabetic());
        if mixed && taken.insert(short.to_string()) {
            return sha;
        }
    }
    unreachable!()
}

impl SynthRepo {
    pub fn generate(spec: SynthSpec) -> SynthRepo {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let repo = spec.repo.clone();
        let web = format!("https://{}/{}/{}", repo.host, repo.owner, repo.name);
        let mut shorts = BTreeSet::new();
        let mut releases = Vec::new();
        let mut change_no = 0usize;
        for r in 0..spec.releases {
            let date = spec.first_release.plus_days(r as i64 * spec.cadence_days);
            let mut changes = Vec::new();
            for _ in 0..spec.changes_per_release {
                let words: Vec<&str> = WORDS.choose_multiple(&mut rng, 3).copied().collect();
                let topic = words.join(" ");
                let prefix = PREFIXES.choose(&mut rng).expect("non-empty");
                let other = WORDS.choose(&mut rng).expect("non-empty");
                let lag_days = rng.gen_range(1..spec.cadence_days.clamp(2, 21));
                let merged = Timestamp::from_unix(date.unix() - lag_days * 86_400 - rng.gen_range(0..3_600));
                let pr_no = 1_000 + change_no as u64;
                let issue_no = 5_000 + change_no as u64;
                let sha = commit_sha(spec.seed, change_no, &mut shorts);
                let pr = Artifact::new(
                    ArtifactKind::PullRequest,
                    repo.clone(),
                    pr_no.to_string(),
                    format!("{prefix}: {} {}", words[0], words[1]),
                    merged,
                    format!("{web}/pull/{pr_no}"),
                )
                .expect("valid key");
                let commit = Artifact::new(
                    ArtifactKind::Commit,
                    repo.clone(),
                    sha.clone(),
                    format!("{prefix}: {} {} (#{pr_no})\n\nTouches the {} code path.", words[0], words[2], other),
                    Timestamp::from_unix(merged.unix() - 600),
                    format!("{web}/commit/{sha}"),
                )
                .expect("valid key");
                let issue = Artifact::new(
                    ArtifactKind::Issue,
                    repo.clone(),
                    issue_no.to_string(),
                    format!("{} breaks when {} is enabled", words[1], other),
                    Timestamp::from_unix(merged.unix() + 120),
                    format!("{web}/issues/{issue_no}"),
                )
                .expect("valid key");
                changes.push(SynthChange {
                    topic,
                    pr,
                    commit,
                    issue,
                });
                change_no += 1;
            }
            let mut body = String::from("## What's Changed\n\n");
            for c in &changes {
                body.push_str(&format!(
                    "- {} (#{}) ({}), fixes #{}\n",
                    c.topic,
                    c.pr.key,
                    &c.commit.key[..7],
                    c.issue.key
                ));
            }
            body.push_str(&format!(
                "\n**Full Changelog**: {web}/compare/v0.{r}.0...v0.{}.0\n",
                r + 1
            ));
            releases.push(SynthRelease {
                id: 10_000 + r as u64,
                tag: format!("v0.{}.0", r + 1),
                date,
                body,
                changes,
            });
        }
        let unmerged_prs = (0..2)
            .map(|i| {
                let d = spec.first_release.plus_days(-(i + 2));
                (900 + i as u64, format!("wip: {}", WORDS[i as usize]), d)
            })
            .collect();
        let last = releases.last().map_or(spec.first_release, |r| r.date);
        let now = last.plus_days(10);
        let stats = RepoStats {
            created_at: spec.first_release.plus_days(-5 * 365),
            is_active: true,
            forks: 1_500,
            stars: 9_000,
            contributors: 40,
            commits: 2_500,
            resolved_issues: 600,
            merged_prs: 700,
            published_releases: 50,
        };
        SynthRepo {
            spec,
            releases,
            unmerged_prs,
            stats,
            now,
        }
    }

    /// Every linked artifact, pull requests then commits then issues.
    pub fn artifacts(&self) -> Vec<Artifact> {
        let changes = || self.releases.iter().flat_map(|r| &r.changes);
        changes()
            .map(|c| c.pr.clone())
            .chain(changes().map(|c| c.commit.clone()))
            .chain(changes().map(|c| c.issue.clone()))
            .collect()
    }

    /// Serves the repository through the REST endpoints the ingest client
    /// reads, paginated at `page_size`, newest first.
    pub fn transport(&self, page_size: u32) -> StaticTransport {
        let t = StaticTransport::new();
        let repo = &self.spec.repo;
        let base = format!("{}/repos/{}/{}", api_base(repo), repo.owner, repo.name);
        let ts = |t: Timestamp| t.to_string();

        let mut releases: Vec<Value> = self
            .releases
            .iter()
            .map(|r| {
                json!({"id": r.id, "tag_name": r.tag, "name": r.tag, "draft": false,
                       "prerelease": false, "created_at": ts(r.date), "published_at": ts(r.date), "body": r.body})
            })
            .collect();
        releases.push(json!({"id": 9_999, "tag_name": "v9.9.9", "name": "next", "draft": true,
                             "prerelease": false, "created_at": ts(self.now), "published_at": null, "body": "- unreleased"}));
        releases.reverse();

        let changes = || self.releases.iter().flat_map(|r| &r.changes);
        let mut pulls: Vec<(Timestamp, Value)> = changes()
            .map(|c| {
                (c.pr.event_date, json!({"number": c.pr.key.parse::<u64>().unwrap(), "state": "closed", "title": c.pr.text,
                       "body": format!("Closes #{}", c.issue.key), "merged_at": ts(c.pr.event_date),
                       "closed_at": ts(c.pr.event_date), "html_url": c.pr.url}))
            })
            .collect();
        for (n, title, d) in &self.unmerged_prs {
            pulls.push((*d, json!({"number": n, "state": "closed", "title": title, "body": null,
                                   "merged_at": null, "closed_at": ts(*d)})));
        }
        let mut issues: Vec<(Timestamp, Value)> = changes()
            .map(|c| {
                (c.issue.event_date, json!({"number": c.issue.key.parse::<u64>().unwrap(), "state": "closed",
                       "title": c.issue.text, "closed_at": ts(c.issue.event_date), "html_url": c.issue.url}))
            })
            .collect();
        for c in changes().step_by(7) {
            issues.push((c.pr.event_date, json!({"number": c.pr.key.parse::<u64>().unwrap(), "state": "closed",
                "title": c.pr.text, "closed_at": ts(c.pr.event_date),
                "pull_request": {"url": format!("{base}/pulls/{}", c.pr.key)}})));
        }
        let mut commits: Vec<(Timestamp, Value)> = changes()
            .map(|c| {
                (c.commit.event_date, json!({"sha": c.commit.key, "html_url": c.commit.url, "commit": {
                    "message": c.commit.text,
                    "author": {"name": "dev", "date": ts(c.commit.event_date)},
                    "committer": {"name": "dev", "date": ts(c.commit.event_date)}}}))
            })
            .collect();
        for list in [&mut pulls, &mut issues, &mut commits] {
            list.sort_by_key(|e| std::cmp::Reverse(e.0));
        }
        let strip = |v: Vec<(Timestamp, Value)>| v.into_iter().map(|(_, x)| x).collect::<Vec<_>>();

        let ps = page_size.max(1);
        serve_pages(&t, &format!("{base}/releases?per_page={ps}"), &releases, ps as usize);
        serve_pages(&t, &format!("{base}/pulls?state=closed&per_page={ps}"), &strip(pulls), ps as usize);
        serve_pages(&t, &format!("{base}/issues?state=closed&per_page={ps}"), &strip(issues), ps as usize);
        let commits = strip(commits);
        serve_pages(&t, &format!("{base}/commits?per_page={ps}"), &commits, ps as usize);

        // eligibility endpoints
        let s = &self.stats;
        t.push_json(&base, &json!({"full_name": format!("{}/{}", repo.owner, repo.name),
            "created_at": ts(s.created_at), "forks_count": s.forks, "stargazers_count": s.stars,
            "default_branch": "main"}), None);
        let last_link = |path: &str, n: u64| Some(format!("<{base}/{path}&page=2>; rel=\"next\", <{base}/{path}&page={n}>; rel=\"last\""));
        t.push_json(&format!("{base}/commits?per_page=1"), &json!([commits[0]]), last_link("commits?per_page=1", s.commits));
        t.push_json(&format!("{base}/contributors?per_page=1&anon=true"), &json!([{"login": "dev"}]),
            last_link("contributors?per_page=1&anon=true", s.contributors));
        t.push_json(&format!("{base}/releases?per_page=1"), &json!([releases[1]]),
            last_link("releases?per_page=1", s.published_releases));
        let search = format!("{}/search/issues?q=repo:{}/{}", api_base(repo), repo.owner, repo.name);
        t.push_json(&format!("{search}+type:issue+state:closed&per_page=1"), &json!({"total_count": s.resolved_issues}), None);
        t.push_json(&format!("{search}+type:pr+is:merged&per_page=1"), &json!({"total_count": s.merged_prs}), None);
        t
    }
}

fn serve_pages(t: &StaticTransport, first: &str, items: &[Value], page_size: usize) {
    let chunks: Vec<&[Value]> = if items.is_empty() { vec![&[]] } else { items.chunks(page_size).collect() };
    let url_of = |i: usize| if i == 0 { first.to_string() } else { format!("{first}&page={}", i + 1) };
    let last = chunks.len() - 1;
    for (i, chunk) in chunks.iter().enumerate() {
        let link = (i < last).then(|| {
            format!("<{}>; rel=\"next\", <{}>; rel=\"last\"", url_of(i + 1), url_of(last))
        });
        t.push_json(&url_of(i), &Value::Array(chunk.to_vec()), link);
    }
}
