//! Stage outputs keyed by a content hash of their inputs and parameters.
//!
//! Each stage directory holds a `stage.json` manifest with the key and the
//! hash of every output file. A stage is skipped when the key matches and
//! every output is still present and unmodified.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const MANIFEST: &str = "stage.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    key: String,
    outputs: BTreeMap<String, String>,
}

/// Builder for a stage key.
pub struct KeyBuilder {
    hasher: Sha256,
}

impl KeyBuilder {
    pub fn new(stage: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(env!("CARGO_PKG_VERSION").as_bytes());
        hasher.update([0]);
        hasher.update(stage.as_bytes());
        Self { hasher }
    }

    pub fn params<T: Serialize>(mut self, params: &T) -> Self {
        let json = serde_json::to_vec(params).expect("parameters serialise");
        self.chunk(b"params", &json);
        self
    }

    pub fn file(mut self, path: &Path) -> Result<Self> {
        let bytes = fs::read(path).with_context(|| format!("reading input {}", path.display()))?;
        self.chunk(b"file", &bytes);
        Ok(self)
    }

    pub fn optional_file(self, path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => self.file(p),
            None => Ok(self),
        }
    }

    fn chunk(&mut self, tag: &[u8], bytes: &[u8]) {
        self.hasher.update(tag);
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
    }

    pub fn finish(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheState {
    Hit,
    Missing,
    /// Key changed or an output was modified.
    Stale,
}

/// Cache slot for one stage directory.
pub struct StageCache {
    pub name: &'static str,
    pub dir: PathBuf,
    key: String,
}

impl StageCache {
    pub fn new(name: &'static str, dir: PathBuf, key: String) -> Self {
        Self { name, dir, key }
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    pub fn state(&self) -> CacheState {
        let text = match fs::read_to_string(self.dir.join(MANIFEST)) {
            Ok(t) => t,
            Err(_) => return CacheState::Missing,
        };
        let manifest: Manifest = match serde_json::from_str(&text) {
            Ok(m) => m,
            Err(_) => return CacheState::Stale,
        };
        if manifest.key != self.key {
            log::info!("{}: stale cache, inputs or parameters changed", self.name);
            return CacheState::Stale;
        }
        for (file, hash) in &manifest.outputs {
            match hash_file(&self.dir.join(file)) {
                Ok(h) if &h == hash => {}
                _ => {
                    log::info!("{}: stale cache, output {file} is missing or modified", self.name);
                    return CacheState::Stale;
                }
            }
        }
        CacheState::Hit
    }

    /// Runs `compute` unless the cache is valid. `compute` writes its files
    /// into the stage directory and returns their names.
    pub fn run(&self, compute: impl FnOnce(&Self) -> Result<Vec<String>>) -> Result<bool> {
        if self.state() == CacheState::Hit {
            log::info!("{}: cache hit, skipping", self.name);
            return Ok(false);
        }
        let _ = fs::remove_file(self.dir.join(MANIFEST));
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        log::info!("{}: running", self.name);
        let files = compute(self)?;
        let mut outputs = BTreeMap::new();
        for f in files {
            outputs.insert(f.clone(), hash_file(&self.dir.join(&f))?);
        }
        let manifest = Manifest { key: self.key.clone(), outputs };
        fs::write(self.dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(true)
    }
}
