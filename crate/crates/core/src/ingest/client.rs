use std::collections::BTreeSet;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::Value;
use tracing::{debug, warn};

use crate::backoff::{exponential, Sleeper, ThreadSleeper};
use crate::error::IngestError;
use crate::ingest::eligibility::{is_active, RepoStats};
use crate::ingest::http::{HttpTransport, RawResponse};
use crate::ingest::ratelimit::TokenBucket;
use crate::ingest::{InFlight, IngestConfig};
use crate::model::{compare_keys, Artifact, ArtifactKind, ReleaseNote, RepoRef, Timestamp};

/// Commit messages are stored up to this many lines.
pub const COMMIT_MESSAGE_MAX_LINES: usize = 72;

const BACKOFF_BASE: Duration = Duration::from_secs(1);
const BACKOFF_MAX: Duration = Duration::from_secs(900);

/// REST base URL for a host: `api.github.com` for github.com, the
/// Enterprise `/api/v3` prefix otherwise.
pub fn api_base(repo: &RepoRef) -> String {
    if repo.host == "github.com" {
        "https://api.github.com".to_string()
    } else {
        format!("https://{}/api/v3", repo.host)
    }
}

fn web_base(repo: &RepoRef) -> String {
    format!("https://{}/{}/{}", repo.host, repo.owner, repo.name)
}

pub struct GitHubClient<'a> {
    transport: &'a dyn HttpTransport,
    token: Option<String>,
    cfg: IngestConfig,
    bucket: Mutex<TokenBucket>,
    in_flight: InFlight,
    sleeper: Box<dyn Sleeper + 'a>,
    epoch: Instant,
}

impl<'a> GitHubClient<'a> {
    pub fn new(
        transport: &'a dyn HttpTransport,
        token: Option<String>,
        cfg: IngestConfig,
    ) -> Result<Self, IngestError> {
        cfg.validate()?;
        Ok(GitHubClient {
            transport,
            token,
            bucket: Mutex::new(TokenBucket::new(cfg.max_requests_per_hour, 0.0)),
            in_flight: InFlight::new(cfg.max_in_flight),
            cfg,
            sleeper: Box::new(ThreadSleeper),
            epoch: Instant::now(),
        })
    }

    pub fn with_sleeper(mut self, sleeper: impl Sleeper + 'a) -> Self {
        self.sleeper = Box::new(sleeper);
        self
    }

    fn clock(&self) -> f64 {
        self.epoch.elapsed().as_secs_f64()
    }

    /// One GET with rate limiting and retries. Returns only 2xx responses.
    fn get(&self, url: &str) -> Result<RawResponse, IngestError> {
        let mut attempt = 0u32;
        loop {
            if self.transport.is_live() {
                let wait = self.bucket.lock().unwrap().acquire(self.clock());
                if !wait.is_zero() {
                    debug!(?wait, "rate limiter wait");
                    self.sleeper.sleep(wait);
                }
            }
            let result = {
                let _slot = self.in_flight.acquire();
                self.transport.get(url, self.token.as_deref())
            };
            let resp = match result {
                Ok(r) => r,
                Err(IngestError::Transport(msg)) if attempt < self.cfg.retry_budget => {
                    warn!(url, %msg, attempt, "transport error, retrying");
                    self.sleeper.sleep(exponential(BACKOFF_BASE, attempt, BACKOFF_MAX));
                    attempt += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if self.transport.is_live() {
                let now_unix = chrono::Utc::now().timestamp();
                self.bucket
                    .lock()
                    .unwrap()
                    .observe(&resp.headers, self.clock(), now_unix);
            }
            match resp.status {
                200..=299 => return Ok(resp),
                401 => return Err(IngestError::Auth(format!("{url}: bad credentials"))),
                403 | 429 if is_rate_limited(&resp) => {
                    let hint = retry_after_secs(&resp);
                    if attempt >= self.cfg.retry_budget {
                        return Err(IngestError::RateLimited {
                            retry_after_secs: hint.unwrap_or(60),
                        });
                    }
                    let backoff = exponential(BACKOFF_BASE, attempt, BACKOFF_MAX);
                    let wait = hint.map(Duration::from_secs).unwrap_or(backoff).max(backoff);
                    warn!(url, ?wait, attempt, "rate limited, backing off");
                    self.sleeper.sleep(wait);
                    attempt += 1;
                }
                403 => return Err(IngestError::Auth(format!("{url}: forbidden"))),
                404 => return Err(IngestError::NotFound(url.to_string())),
                500..=599 if attempt < self.cfg.retry_budget => {
                    warn!(url, status = resp.status, attempt, "server error, retrying");
                    self.sleeper.sleep(exponential(BACKOFF_BASE, attempt, BACKOFF_MAX));
                    attempt += 1;
                }
                status => {
                    return Err(IngestError::Http {
                        status,
                        url: url.to_string(),
                    })
                }
            }
        }
    }

    fn get_json<T: for<'de> Deserialize<'de>>(&self, url: &str) -> Result<(T, RawResponse), IngestError> {
        let resp = self.get(url)?;
        let v = serde_json::from_str(&resp.body).map_err(|e| IngestError::Decode {
            url: url.to_string(),
            message: e.to_string(),
        })?;
        Ok((v, resp))
    }

    /// Follows `rel="next"` links from `first`. Each page is fetched once;
    /// records repeated across pages (by `id_field`) are kept once.
    fn paginate(&self, first: &str, id_field: &str) -> Result<Vec<Value>, IngestError> {
        let mut seen_urls = BTreeSet::new();
        let mut seen_ids = BTreeSet::new();
        let mut out = Vec::new();
        let mut next = Some(first.to_string());
        while let Some(url) = next.take() {
            if !seen_urls.insert(url.clone()) {
                warn!(%url, "pagination cycle, stopping");
                break;
            }
            let (page, resp): (Vec<Value>, _) = self.get_json(&url)?;
            for item in page {
                let id = item.get(id_field).map(Value::to_string).unwrap_or_default();
                if id.is_empty() || seen_ids.insert(id) {
                    out.push(item);
                }
            }
            next = resp.link("next");
        }
        Ok(out)
    }

    fn list_url(&self, repo: &RepoRef, path: &str, query: &str) -> String {
        let sep = if query.is_empty() { "" } else { "&" };
        format!(
            "{}/repos/{}/{}/{path}?{query}{sep}per_page={}",
            api_base(repo),
            repo.owner,
            repo.name,
            self.cfg.page_size
        )
    }

    /// Published releases (drafts excluded) with unsegmented bodies, by
    /// release date then tag. Also returns the number of drafts dropped.
    pub fn fetch_releases(&self, repo: &RepoRef) -> Result<(Vec<ReleaseNote>, usize), IngestError> {
        let url = self.list_url(repo, "releases", "");
        let mut drafts = 0;
        let mut out = Vec::new();
        for item in self.paginate(&url, "id")? {
            let draft = item.get("draft").and_then(Value::as_bool).unwrap_or(false);
            let published = opt_ts(&item, "published_at", &url)?;
            let Some(date) = published.filter(|_| !draft) else {
                drafts += 1;
                continue;
            };
            out.push(ReleaseNote {
                repo: repo.clone(),
                tag: req_str(&item, "tag_name", &url)?.to_string(),
                release_date: date,
                body: item.get("body").and_then(Value::as_str).unwrap_or("").to_string(),
                segments: Vec::new(),
            });
        }
        out.sort_by(|a, b| (a.release_date, &a.tag).cmp(&(b.release_date, &b.tag)));
        Ok((out, drafts))
    }

    /// Merged pull requests, default-branch commits, or closed issues,
    /// ordered by `(event_date, key)`.
    pub fn fetch_artifacts(&self, repo: &RepoRef, kind: ArtifactKind) -> Result<Vec<Artifact>, IngestError> {
        let mut out = Vec::new();
        match kind {
            ArtifactKind::PullRequest => {
                let url = self.list_url(repo, "pulls", "state=closed");
                for item in self.paginate(&url, "number")? {
                    let Some(merged) = opt_ts(&item, "merged_at", &url)? else {
                        continue;
                    };
                    let key = req_u64(&item, "number", &url)?.to_string();
                    let link = format!("{}/pull/{key}", web_base(repo));
                    out.push(artifact(kind, repo, key, title(&item), merged, link, &url)?);
                }
            }
            ArtifactKind::Issue => {
                let url = self.list_url(repo, "issues", "state=closed");
                for item in self.paginate(&url, "number")? {
                    if item.get("pull_request").is_some_and(|v| !v.is_null()) {
                        continue;
                    }
                    let Some(closed) = opt_ts(&item, "closed_at", &url)? else {
                        continue;
                    };
                    let key = req_u64(&item, "number", &url)?.to_string();
                    let link = format!("{}/issues/{key}", web_base(repo));
                    out.push(artifact(kind, repo, key, title(&item), closed, link, &url)?);
                }
            }
            ArtifactKind::Commit => {
                let url = self.list_url(repo, "commits", "");
                for item in self.paginate(&url, "sha")? {
                    let sha = req_str(&item, "sha", &url)?.to_ascii_lowercase();
                    let commit = item.get("commit").unwrap_or(&Value::Null);
                    let date = opt_ts(commit.get("committer").unwrap_or(&Value::Null), "date", &url)?
                        .or(opt_ts(commit.get("author").unwrap_or(&Value::Null), "date", &url)?)
                        .ok_or_else(|| decode(&url, format!("commit {sha} has no date")))?;
                    let message = commit.get("message").and_then(Value::as_str).unwrap_or("");
                    let link = format!("{}/commit/{sha}", web_base(repo));
                    out.push(artifact(kind, repo, sha, truncate_lines(message), date, link, &url)?);
                }
            }
        }
        out.sort_by(|a, b| a.event_date.cmp(&b.event_date).then_with(|| compare_keys(&a.key, &b.key)));
        Ok(out)
    }

    /// Counts needed by the eligibility check. `now` anchors the activity test.
    pub fn fetch_repo_stats(&self, repo: &RepoRef, now: Timestamp) -> Result<RepoStats, IngestError> {
        let base = format!("{}/repos/{}/{}", api_base(repo), repo.owner, repo.name);
        let (meta, _): (Value, _) = self.get_json(&base)?;
        let created_at = opt_ts(&meta, "created_at", &base)?
            .ok_or_else(|| decode(&base, "missing created_at".into()))?;

        let commits_url = format!("{base}/commits?per_page=1");
        let (latest, resp): (Vec<Value>, _) = self.get_json(&commits_url)?;
        let commits = counted(&latest, &resp);
        let last_commit = match latest.first().and_then(|c| c.get("commit")) {
            Some(c) => opt_ts(c.get("committer").unwrap_or(&Value::Null), "date", &commits_url)?,
            None => None,
        };

        let contributors_url = format!("{base}/contributors?per_page=1&anon=true");
        let (first, resp): (Vec<Value>, _) = self.get_json(&contributors_url)?;
        let contributors = counted(&first, &resp);

        let releases_url = format!("{base}/releases?per_page=1");
        let (first, resp): (Vec<Value>, _) = self.get_json(&releases_url)?;
        let published_releases = counted(&first, &resp);

        let search = |q: &str| -> Result<u64, IngestError> {
            let url = format!(
                "{}/search/issues?q=repo:{}/{}+{q}&per_page=1",
                api_base(repo),
                repo.owner,
                repo.name
            );
            let (v, _): (Value, _) = self.get_json(&url)?;
            v.get("total_count")
                .and_then(Value::as_u64)
                .ok_or_else(|| decode(&url, "missing total_count".into()))
        };

        Ok(RepoStats {
            created_at,
            is_active: is_active(last_commit, now),
            forks: meta.get("forks_count").and_then(Value::as_u64).unwrap_or(0),
            stars: meta.get("stargazers_count").and_then(Value::as_u64).unwrap_or(0),
            contributors,
            commits,
            resolved_issues: search("type:issue+state:closed")?,
            merged_prs: search("type:pr+is:merged")?,
            published_releases,
        })
    }
}

/// Everything fetched for one repository.
#[derive(Debug, Clone, PartialEq)]
pub struct RepoData {
    pub repo: RepoRef,
    pub releases: Vec<ReleaseNote>,
    pub drafts_excluded: usize,
    /// Pull requests, then commits, then issues; each in `(event_date, key)` order.
    pub artifacts: Vec<Artifact>,
    pub stats: Option<RepoStats>,
}

/// Fetches releases and the three artifact kinds concurrently (plus stats
/// when `stats_at` is given). Assembly order is fixed.
pub fn collect_repo(
    client: &GitHubClient<'_>,
    repo: &RepoRef,
    stats_at: Option<Timestamp>,
) -> Result<RepoData, IngestError> {
    std::thread::scope(|s| {
        let releases = s.spawn(|| client.fetch_releases(repo));
        let kinds = ArtifactKind::ALL.map(|k| s.spawn(move || client.fetch_artifacts(repo, k)));
        let stats = stats_at.map(|now| s.spawn(move || client.fetch_repo_stats(repo, now)));
        let (releases, drafts_excluded) = releases.join().expect("fetch thread panicked")?;
        let mut artifacts = Vec::new();
        for h in kinds {
            artifacts.extend(h.join().expect("fetch thread panicked")?);
        }
        let stats = match stats {
            Some(h) => Some(h.join().expect("fetch thread panicked")?),
            None => None,
        };
        Ok(RepoData {
            repo: repo.clone(),
            releases,
            drafts_excluded,
            artifacts,
            stats,
        })
    })
}

fn is_rate_limited(resp: &RawResponse) -> bool {
    resp.status == 429
        || resp.header("retry-after").is_some()
        || resp.header("x-ratelimit-remaining").is_some_and(|v| v.trim() == "0")
}

fn retry_after_secs(resp: &RawResponse) -> Option<u64> {
    if let Some(v) = resp.header("retry-after").and_then(|v| v.trim().parse().ok()) {
        return Some(v);
    }
    let reset: i64 = resp.header("x-ratelimit-reset")?.trim().parse().ok()?;
    Some((reset - chrono::Utc::now().timestamp()).max(0) as u64)
}

/// Total item count of a `per_page=1` listing: the `last` page number when
/// paginated, the page length otherwise.
fn counted(page: &[Value], resp: &RawResponse) -> u64 {
    resp.link("last")
        .and_then(|l| url::Url::parse(&l).ok())
        .and_then(|u| {
            u.query_pairs()
                .find(|(k, _)| k == "page")
                .and_then(|(_, v)| v.parse().ok())
        })
        .unwrap_or(page.len() as u64)
}

fn truncate_lines(message: &str) -> String {
    message
        .lines()
        .take(COMMIT_MESSAGE_MAX_LINES)
        .collect::<Vec<_>>()
        .join("\n")
}

fn title(item: &Value) -> String {
    item.get("title").and_then(Value::as_str).unwrap_or("").to_string()
}

fn decode(url: &str, message: String) -> IngestError {
    IngestError::Decode {
        url: url.to_string(),
        message,
    }
}

fn req_str<'v>(item: &'v Value, field: &str, url: &str) -> Result<&'v str, IngestError> {
    item.get(field)
        .and_then(Value::as_str)
        .ok_or_else(|| decode(url, format!("missing string field {field}")))
}

fn req_u64(item: &Value, field: &str, url: &str) -> Result<u64, IngestError> {
    item.get(field)
        .and_then(Value::as_u64)
        .ok_or_else(|| decode(url, format!("missing numeric field {field}")))
}

fn opt_ts(item: &Value, field: &str, url: &str) -> Result<Option<Timestamp>, IngestError> {
    match item.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Timestamp::parse(s)
            .map(Some)
            .map_err(|e| decode(url, e.to_string())),
        Some(other) => Err(decode(url, format!("{field} is not a timestamp: {other}"))),
    }
}

fn artifact(
    kind: ArtifactKind,
    repo: &RepoRef,
    key: String,
    text: String,
    date: Timestamp,
    link: String,
    url: &str,
) -> Result<Artifact, IngestError> {
    Artifact::new(kind, repo.clone(), key, text, date, link).map_err(|e| decode(url, e.to_string()))
}
