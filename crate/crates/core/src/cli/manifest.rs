//! Run manifests, content digests and all-or-nothing output directories.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// File name inside the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<OutputDigest>,
    pub wall_time_ms: u64,
}

impl RunManifest {
    pub fn output(&self, name: &str) -> Option<&OutputDigest> {
        self.outputs.iter().find(|o| o.path == name)
    }

    pub fn input(&self, role: &str) -> Option<&InputDigest> {
        self.inputs.iter().find(|i| i.role == role)
    }

    pub fn read(dir: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Files staged in memory and written together.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    pub fn digests(&self) -> Vec<OutputDigest> {
        self.files
            .iter()
            .map(|(name, bytes)| OutputDigest {
                path: name.clone(),
                sha256: sha256_hex(bytes),
            })
            .collect()
    }

    /// Write every file to a temporary name, then rename them all into
    /// place. On any write failure the temporaries are removed and nothing
    /// under the final names changes.
    pub fn commit(self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
            if let Err(e) = fs::write(&tmp, bytes) {
                let _ = fs::remove_file(&tmp);
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                return Err(e);
            }
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, dest) in staged {
            fs::rename(&tmp, &dest)?;
            written.push(dest);
        }
        Ok(written)
    }
}
