//! Output headers and atomic file writes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::Failure;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tool version, config hash and seed; written at the top of every output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
}

impl Header {
    /// Hashes the canonical JSON form of `config` (keys sorted).
    pub fn new(config: &BTreeMap<String, Value>, seed: u64) -> Self {
        let canon = serde_json::to_string(config).expect("config serializes");
        Header {
            version: VERSION,
            config_hash: hex::encode(Sha256::digest(canon.as_bytes())),
            seed,
        }
    }

    /// `<prefix> smw <version> config=<hash> seed=<seed>`
    pub fn line(&self, prefix: &str) -> String {
        format!("{prefix} smw {} config={} seed={}\n", self.version, self.config_hash, self.seed)
    }

    pub fn json(&self) -> Value {
        serde_json::json!({
            "tool": "smw",
            "version": self.version,
            "config_hash": self.config_hash,
            "seed": self.seed,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `contents` to `dir/name` through a temporary file in the same
/// directory and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    let io = |e: std::io::Error| Failure::Resource(format!("writing {}: {e}", dir.join(name).display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.flush().map_err(io)?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(path)
}
