use std::collections::{BTreeMap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use chrono::NaiveDate;
use serde_json::Value;

use super::cache::{CacheKey, ResponseCache};
use super::contract::format_block;
use crate::error::{Error, Result};

/// One completion request. The endpoint is treated as text in, text out.
#[derive(Debug, Clone)]
pub struct LlmRequest<'a> {
    pub system: &'a str,
    pub user: &'a str,
    pub budget: u32,
    pub model_name: &'a str,
    pub key: &'a CacheKey,
    pub expected: &'a [String],
}

pub trait Transport: Send + Sync {
    fn complete(&self, request: &LlmRequest<'_>) -> Result<String>;
}

pub const DEFAULT_BODY_TEMPLATE: &str = r#"{"model":"{model_id}","max_completion_tokens_reasoning":{budget},"messages":[{"role":"system","content":"{system}"},{"role":"user","content":"{user}"}]}"#;
pub const DEFAULT_RESPONSE_PATH: &str = "choices.0.message.content";

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the token, if any.
    pub auth_env: Option<String>,
    pub auth_header: String,
    pub auth_prefix: String,
    pub headers: Vec<(String, String)>,
    pub body_template: String,
    /// Dot path into the JSON reply; numeric segments index arrays.
    pub response_path: String,
    pub timeout_secs: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            auth_env: None,
            auth_header: "Authorization".into(),
            auth_prefix: "Bearer ".into(),
            headers: Vec::new(),
            body_template: DEFAULT_BODY_TEMPLATE.into(),
            response_path: DEFAULT_RESPONSE_PATH.into(),
            timeout_secs: 120,
        }
    }
}

fn json_escape(s: &str) -> String {
    let quoted = serde_json::to_string(s).expect("strings serialize");
    quoted[1..quoted.len() - 1].to_string()
}

/// Single-pass placeholder substitution; inserted text is never rescanned.
pub fn render_body(template: &str, request: &LlmRequest<'_>) -> String {
    let mut out = String::with_capacity(template.len() + request.system.len() + request.user.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let close = tail.find('}');
        let name = close.map(|c| &tail[1..c]);
        let value = match name {
            Some("system") => Some(json_escape(request.system)),
            Some("user") => Some(json_escape(request.user)),
            Some("model_id") => Some(json_escape(request.model_name)),
            Some("budget") => Some(request.budget.to_string()),
            _ => None,
        };
        match (value, close) {
            (Some(v), Some(c)) => {
                out.push_str(&v);
                rest = &tail[c + 1..];
            }
            _ => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn extract_path<'v>(value: &'v Value, path: &str) -> Option<&'v Value> {
    path.split('.').filter(|s| !s.is_empty()).try_fold(value, |v, seg| match v {
        Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get(i)),
        Value::Object(map) => map.get(seg),
        _ => None,
    })
}

pub struct HttpTransport {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(config: HttpConfig) -> Result<Self> {
        if config.endpoint.is_empty() {
            return Err(Error::Config("http transport needs an endpoint".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(Self { config, client })
    }
}

impl Transport for HttpTransport {
    fn complete(&self, request: &LlmRequest<'_>) -> Result<String> {
        let cfg = &self.config;
        let mut req = self
            .client
            .post(&cfg.endpoint)
            .header("Content-Type", "application/json")
            .body(render_body(&cfg.body_template, request));
        if let Some(var) = &cfg.auth_env {
            let token = std::env::var(var)
                .map_err(|_| Error::Transport(format!("auth variable {var} is not set")))?;
            req = req.header(cfg.auth_header.as_str(), format!("{}{token}", cfg.auth_prefix));
        }
        for (k, v) in &cfg.headers {
            req = req.header(k.as_str(), v.as_str());
        }
        let resp = req.send().map_err(|e| Error::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().map_err(|e| Error::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(Error::Transport(format!("http status {status}")));
        }
        let json: Value = serde_json::from_str(&body)
            .map_err(|e| Error::Transport(format!("reply is not json: {e}")))?;
        match extract_path(&json, &cfg.response_path) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(Error::Transport(format!("'{}' is not a string", cfg.response_path))),
            None => Err(Error::Transport(format!("'{}' not found in reply", cfg.response_path))),
        }
    }
}

/// Replies with precomputed scores formatted per the output contract.
pub struct MockTransport {
    scores: BTreeMap<NaiveDate, Vec<(String, f64)>>,
}

impl MockTransport {
    pub fn new(scores: BTreeMap<NaiveDate, Vec<(String, f64)>>) -> Self {
        Self { scores }
    }
}

impl Transport for MockTransport {
    fn complete(&self, request: &LlmRequest<'_>) -> Result<String> {
        let row = self
            .scores
            .get(&request.key.date)
            .ok_or_else(|| Error::Transport(format!("mock has no scores for {}", request.key.date)))?;
        let by_ticker: BTreeMap<&str, f64> = row.iter().map(|(t, s)| (t.as_str(), *s)).collect();
        let ordered: Vec<(String, f64)> = request
            .expected
            .iter()
            .filter_map(|t| by_ticker.get(t.as_str()).map(|s| (t.clone(), *s)))
            .collect();
        Ok(format_block(&ordered))
    }
}

/// Returns queued replies in order; for exercising retry paths.
pub struct ScriptedTransport {
    replies: Mutex<VecDeque<std::result::Result<String, String>>>,
    calls: AtomicUsize,
}

impl ScriptedTransport {
    pub fn new(replies: Vec<std::result::Result<String, String>>) -> Self {
        Self {
            replies: Mutex::new(replies.into()),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for ScriptedTransport {
    fn complete(&self, _request: &LlmRequest<'_>) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        match self.replies.lock().expect("script lock").pop_front() {
            Some(Ok(text)) => Ok(text),
            Some(Err(e)) => Err(Error::Transport(e)),
            None => Err(Error::Transport("script exhausted".into())),
        }
    }
}

/// Serves raw text from another run's cache directory.
pub struct ReplayTransport {
    store: ResponseCache,
}

impl ReplayTransport {
    /// `base` is the directory holding `cache/`.
    pub fn new(base: &std::path::Path) -> Self {
        Self {
            store: ResponseCache::new(base),
        }
    }
}

impl Transport for ReplayTransport {
    fn complete(&self, request: &LlmRequest<'_>) -> Result<String> {
        let path = self.store.text_path(request.key);
        std::fs::read_to_string(&path)
            .map_err(|_| Error::Transport(format!("replay store has no entry {}", path.display())))
    }
}
