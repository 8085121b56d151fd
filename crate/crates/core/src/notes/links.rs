//! Rule-based labeling of hyperlinks and shorthand references.

use serde::{Deserialize, Serialize};
use url::Url;

use crate::model::{ArtifactKind, RepoRef};

/// What a reference was recognised as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    PullRequest,
    Commit,
    Issue,
    /// `#N` shorthand; pull requests and issues share the number space, so
    /// the kind is decided later by looking up fetched artifacts.
    UnresolvedNumber,
    /// A bare 7 to 40 digit hex token, matched later by unique prefix.
    CommitCandidate,
}

impl LinkKind {
    pub fn artifact_kind(&self) -> Option<ArtifactKind> {
        match self {
            LinkKind::PullRequest => Some(ArtifactKind::PullRequest),
            LinkKind::Commit | LinkKind::CommitCandidate => Some(ArtifactKind::Commit),
            LinkKind::Issue => Some(ArtifactKind::Issue),
            LinkKind::UnresolvedNumber => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkLabel {
    pub url: String,
    /// Set iff a labeling rule matched.
    pub kind: Option<LinkKind>,
    /// Set iff `kind` is set.
    pub key: Option<String>,
    /// True when the reference names a repository other than the one the
    /// release belongs to.
    pub cross_repo: bool,
}

impl LinkLabel {
    fn unset(url: &str) -> Self {
        LinkLabel {
            url: url.to_string(),
            kind: None,
            key: None,
            cross_repo: false,
        }
    }

    fn labeled(url: &str, kind: LinkKind, key: &str, cross_repo: bool) -> Self {
        let key = match kind {
            LinkKind::Commit | LinkKind::CommitCandidate => key.to_ascii_lowercase(),
            _ => key.to_string(),
        };
        LinkLabel {
            url: url.to_string(),
            kind: Some(kind),
            key: Some(key),
            cross_repo,
        }
    }
}

fn is_number(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn is_hash(s: &str) -> bool {
    (7..=40).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_hexdigit())
}

fn normalize_host(h: &str) -> String {
    let h = h.to_ascii_lowercase();
    h.strip_prefix("www.").map(str::to_string).unwrap_or(h)
}

/// Labels one reference found in a release note of `repo`.
///
/// Path rules are checked in order `/commit/`, `/pull/`, `/issues/`, so at
/// most one kind is ever assigned. The key is the path segment right after
/// the marker and must be a hex hash (commits) or a decimal number.
pub fn classify_link(url: &str, repo: &RepoRef) -> LinkLabel {
    let trimmed = url.trim();
    if trimmed.is_empty() {
        return LinkLabel::unset(url);
    }

    // shorthand forms
    if let Some(num) = trimmed.strip_prefix('#') {
        if is_number(num) {
            return LinkLabel::labeled(url, LinkKind::UnresolvedNumber, num, false);
        }
        return LinkLabel::unset(url);
    }
    if let Some((path, num)) = trimmed.split_once('#') {
        if is_number(num) && !path.contains(':') {
            if let Some((owner, name)) = path.split_once('/') {
                if !owner.is_empty() && !name.is_empty() && !name.contains('/') {
                    let cross = !(owner.eq_ignore_ascii_case(&repo.owner)
                        && name.eq_ignore_ascii_case(&repo.name));
                    return LinkLabel::labeled(url, LinkKind::UnresolvedNumber, num, cross);
                }
            }
        }
    }
    if !trimmed.contains(['/', ':', '.']) {
        if is_hash(trimmed) {
            return LinkLabel::labeled(url, LinkKind::CommitCandidate, trimmed, false);
        }
        return LinkLabel::unset(url);
    }

    // hyperlinks: absolute, or relative to the repository page
    let (host, path) = match Url::parse(trimmed) {
        Ok(u) if matches!(u.scheme(), "http" | "https") => {
            (u.host_str().map(normalize_host), u.path().to_string())
        }
        Ok(_) => return LinkLabel::unset(url),
        Err(_) => {
            let p = trimmed.split(['?', '#']).next().unwrap_or("");
            (None, p.to_string())
        }
    };
    let segments: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();

    let rules = [
        ("commit", LinkKind::Commit),
        ("pull", LinkKind::PullRequest),
        ("issues", LinkKind::Issue),
    ];
    for (marker, kind) in rules {
        let Some(i) = segments.iter().position(|s| *s == marker) else {
            continue;
        };
        let Some(key) = segments.get(i + 1) else {
            continue;
        };
        let valid = match kind {
            LinkKind::Commit => is_hash(key),
            _ => is_number(key),
        };
        if !valid {
            continue;
        }
        let owner_name = (i >= 2 && segments[i - 2] != "..").then(|| (segments[i - 2], segments[i - 1]));
        let cross = match (&host, owner_name) {
            (Some(h), Some((o, n))) => {
                *h != normalize_host(&repo.host)
                    || !o.eq_ignore_ascii_case(&repo.owner)
                    || !n.eq_ignore_ascii_case(&repo.name)
            }
            // absolute URL without an owner/name path cannot be this repository
            (Some(_), None) => true,
            (None, Some((o, n))) if path.starts_with('/') => {
                !o.eq_ignore_ascii_case(&repo.owner) || !n.eq_ignore_ascii_case(&repo.name)
            }
            (None, _) => false,
        };
        return LinkLabel::labeled(url, kind, key, cross);
    }
    LinkLabel::unset(url)
}
