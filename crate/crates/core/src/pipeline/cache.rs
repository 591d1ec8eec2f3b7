use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of several parts; each is length-prefixed so boundaries matter.
pub fn cache_key(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

/// Writes through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Stage outputs stored as JSON under a content-derived key.
#[derive(Debug, Clone)]
pub struct StageCache {
    dir: PathBuf,
}

impl StageCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        StageCache { dir: dir.into() }
    }

    pub fn path(&self, stage: &str, key: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{stage}-{}.{ext}", &key[..key.len().min(32)]))
    }

    /// `None` when absent; a file that fails to parse is reported and
    /// treated as absent.
    pub fn load<T: DeserializeOwned>(&self, stage: &str, key: &str) -> Option<T> {
        let path = self.path(stage, key, "json");
        let bytes = std::fs::read(&path).ok()?;
        match serde_json::from_slice(&bytes) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("{}: unreadable cache entry ({e}); recomputing", path.display());
                None
            }
        }
    }

    pub fn store<T: Serialize>(&self, stage: &str, key: &str, value: &T) -> Result<()> {
        let bytes = serde_json::to_vec(value).map_err(|e| Error::parse(stage, e.to_string()))?;
        write_atomic(&self.path(stage, key, "json"), &bytes)
    }

    /// Returns the cached value or computes and stores it. The flag is true
    /// on a cache hit.
    pub fn get_or_compute<T: Serialize + DeserializeOwned>(
        &self,
        stage: &str,
        key: &str,
        compute: impl FnOnce() -> Result<T>,
    ) -> Result<(T, bool)> {
        if let Some(v) = self.load(stage, key) {
            log::info!("{stage}: cache hit");
            return Ok((v, true));
        }
        let v = compute()?;
        self.store(stage, key, &v)?;
        Ok((v, false))
    }
}
