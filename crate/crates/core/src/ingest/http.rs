use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::IngestError;

/// One HTTP response as fetched and as stored in a snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawResponse {
    pub url: String,
    pub status: u16,
    /// Lowercased header names.
    pub headers: BTreeMap<String, String>,
    pub body: String,
}

impl RawResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(&name.to_ascii_lowercase()).map(String::as_str)
    }

    /// Target of the `rel="<rel>"` entry of the `Link` header.
    pub fn link(&self, rel: &str) -> Option<String> {
        parse_link_header(self.header("link")?, rel)
    }
}

/// Extracts the URL for `rel` from an RFC 8288 `Link` header value.
pub fn parse_link_header(value: &str, rel: &str) -> Option<String> {
    value.split(',').find_map(|part| {
        let mut pieces = part.split(';');
        let target = pieces.next()?.trim();
        let target = target.strip_prefix('<')?.strip_suffix('>')?;
        let has_rel = pieces.any(|p| {
            let p = p.trim();
            p.strip_prefix("rel=")
                .map(|v| v.trim_matches('"').split_whitespace().any(|r| r == rel))
                .unwrap_or(false)
        });
        has_rel.then(|| target.to_string())
    })
}

/// GET transport. Implementations: live HTTP, snapshot replay, and a
/// recording wrapper.
pub trait HttpTransport: Send + Sync {
    fn get(&self, url: &str, token: Option<&str>) -> Result<RawResponse, IngestError>;

    /// Live transports are rate limited; replays are not.
    fn is_live(&self) -> bool {
        true
    }
}

pub struct LiveTransport {
    client: reqwest::blocking::Client,
}

impl LiveTransport {
    pub fn new() -> Result<Self, IngestError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .user_agent(concat!("tracelink/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| IngestError::Transport(e.to_string()))?;
        Ok(LiveTransport { client })
    }
}

impl HttpTransport for LiveTransport {
    fn get(&self, url: &str, token: Option<&str>) -> Result<RawResponse, IngestError> {
        let mut req = self
            .client
            .get(url)
            .header("Accept", "application/vnd.github.v3+json")
            .header("X-GitHub-Api-Version", "2022-11-28");
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        let resp = req
            .send()
            .map_err(|e| IngestError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| Some((k.as_str().to_ascii_lowercase(), v.to_str().ok()?.to_string())))
            .collect();
        let body = resp
            .text()
            .map_err(|e| IngestError::Transport(e.to_string()))?;
        Ok(RawResponse {
            url: url.to_string(),
            status,
            headers,
            body,
        })
    }
}

/// In-memory transport for fixtures and synthetic repositories.
///
/// Each URL holds a queue of responses; `get` pops the front until one
/// remains, which then repeats. Unknown URLs yield a 404.
#[derive(Debug, Default)]
pub struct StaticTransport {
    responses: Mutex<BTreeMap<String, VecDeque<RawResponse>>>,
    calls: Mutex<Vec<String>>,
}

impl StaticTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, resp: RawResponse) {
        self.responses
            .lock()
            .unwrap()
            .entry(resp.url.clone())
            .or_default()
            .push_back(resp);
    }

    /// Queues a 200 response with a JSON body and optional `Link` header.
    pub fn push_json(&self, url: &str, body: &serde_json::Value, link: Option<String>) {
        let mut headers = BTreeMap::new();
        headers.insert("content-type".to_string(), "application/json".to_string());
        if let Some(l) = link {
            headers.insert("link".to_string(), l);
        }
        self.push(RawResponse {
            url: url.to_string(),
            status: 200,
            headers,
            body: serde_json::to_string(body).expect("json values serialize"),
        });
    }

    /// URLs requested so far, in order.
    pub fn calls(&self) -> Vec<String> {
        self.calls.lock().unwrap().clone()
    }
}

impl HttpTransport for StaticTransport {
    fn get(&self, url: &str, _token: Option<&str>) -> Result<RawResponse, IngestError> {
        self.calls.lock().unwrap().push(url.to_string());
        let mut map = self.responses.lock().unwrap();
        match map.get_mut(url) {
            Some(q) if q.len() > 1 => Ok(q.pop_front().expect("non-empty")),
            Some(q) => Ok(q.front().cloned().expect("queues are never empty")),
            None => Ok(RawResponse {
                url: url.to_string(),
                status: 404,
                headers: BTreeMap::new(),
                body: r#"{"message":"Not Found"}"#.to_string(),
            }),
        }
    }

    fn is_live(&self) -> bool {
        false
    }
}
