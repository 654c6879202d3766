use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use super::contract::{parse_response, LlmResponse};
use crate::error::{Error, Result};

/// Order-sensitive hash of a universe's ticker list.
pub fn universe_signature(tickers: &[String]) -> String {
    let mut h = Sha256::new();
    for t in tickers {
        h.update((t.len() as u64).to_le_bytes());
        h.update(t.as_bytes());
    }
    hex::encode(&h.finalize()[..16])
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey {
    pub model: String,
    pub horizon: usize,
    pub universe: String,
    pub date: NaiveDate,
}

impl CacheKey {
    pub fn new(model: &str, horizon: usize, tickers: &[String], date: NaiveDate) -> Self {
        Self {
            model: model.to_string(),
            horizon,
            universe: universe_signature(tickers),
            date,
        }
    }

    fn dir(&self, root: &Path) -> PathBuf {
        root.join(&self.model)
            .join(self.horizon.to_string())
            .join(&self.universe)
    }
}

fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Content-checked store of accepted responses, one file per key plus a status sidecar.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    root: PathBuf,
}

impl ResponseCache {
    /// Store rooted at `<base>/cache`.
    pub fn new(base: &Path) -> Self {
        Self { root: base.join("cache") }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn text_path(&self, key: &CacheKey) -> PathBuf {
        key.dir(&self.root).join(format!("{}.txt", key.date))
    }

    pub fn status_path(&self, key: &CacheKey) -> PathBuf {
        key.dir(&self.root).join(format!("{}.status", key.date))
    }

    /// `Ok(None)` on a miss; a half-written or tampered entry is an error.
    pub fn lookup(&self, key: &CacheKey, expected: &[String]) -> Result<Option<LlmResponse>> {
        let (tp, sp) = (self.text_path(key), self.status_path(key));
        match (tp.exists(), sp.exists()) {
            (false, false) => return Ok(None),
            (true, false) => return Err(corrupt(&tp, "status sidecar missing")),
            (false, true) => return Err(corrupt(&sp, "response text missing")),
            (true, true) => {}
        }
        let text = fs::read_to_string(&tp).map_err(|e| Error::io(&tp, e))?;
        let status = fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
        let mut fields = std::collections::BTreeMap::new();
        for line in status.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| corrupt(&sp, "malformed status line"))?;
            fields.insert(k, v);
        }
        if fields.get("status") != Some(&"ok") {
            return Err(corrupt(&sp, "status is not ok"));
        }
        if fields.get("sha256") != Some(&digest(&text).as_str()) {
            return Err(corrupt(&tp, "content hash mismatch"));
        }
        let parsed = parse_response(&text, expected);
        if !parsed.status.is_ok() {
            return Err(corrupt(&tp, &format!("cached text fails contract: {}", parsed.status.code())));
        }
        Ok(Some(parsed))
    }

    pub fn store(&self, key: &CacheKey, response: &LlmResponse) -> Result<()> {
        if !response.status.is_ok() {
            return Err(Error::Argument("only accepted responses are cached".into()));
        }
        let dir = key.dir(&self.root);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let status = format!(
            "status=ok\nsha256={}\nsurrounding_text={}\n",
            digest(&response.raw),
            response.surrounding_text
        );
        write_atomic(&self.text_path(key), &response.raw)?;
        write_atomic(&self.status_path(key), &status)
    }
}

fn corrupt(path: &Path, message: &str) -> Error {
    Error::CacheCorrupt {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
