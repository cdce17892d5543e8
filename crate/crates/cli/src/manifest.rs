//! `manifest.json`: one per output directory, merged across stages.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rescon_core::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub warnings: Vec<String>,
    /// Wall-clock seconds. The only field that may differ between reruns.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Effective configuration with paths reduced to file names.
    pub config: serde_json::Value,
    /// sha256 of input files, keyed by file name.
    pub inputs: BTreeMap<String, String>,
    /// Stages in first-run order; a rerun replaces its entry.
    pub stages: Vec<StageRecord>,
    /// sha256 of every other file in the directory, keyed by relative path.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    use std::io::Read;
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Digests of all files below `dir` except the manifest, keyed by `/`-joined
/// relative path.
pub fn digest_dir(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    walk(dir, "", &mut out)?;
    Ok(out)
}

fn walk(dir: &Path, prefix: &str, out: &mut BTreeMap<String, String>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let rel = if prefix.is_empty() {
            name.clone()
        } else {
            format!("{prefix}/{name}")
        };
        let path = entry.path();
        if path.is_dir() {
            walk(&path, &rel, out)?;
        } else if rel != MANIFEST_FILE {
            out.insert(rel, sha256_file(&path)?);
        }
    }
    Ok(())
}

impl RunManifest {
    /// Existing manifest in `dir`, or a fresh one. An unreadable manifest is
    /// replaced.
    pub fn open(dir: &Path) -> Self {
        fs::read_to_string(dir.join(MANIFEST_FILE))
            .ok()
            .and_then(|t| serde_json::from_str::<RunManifest>(&t).ok())
            .unwrap_or_default()
    }

    pub fn record_stage(&mut self, stage: StageRecord) {
        match self.stages.iter_mut().find(|s| s.name == stage.name) {
            Some(s) => *s = stage,
            None => self.stages.push(stage),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.inputs.insert(name, sha256_file(path)?);
        Ok(())
    }

    /// Refreshes output digests and writes the manifest into `dir`.
    pub fn save(&mut self, dir: &Path) -> Result<()> {
        self.tool = "rescon".into();
        self.version = env!("CARGO_PKG_VERSION").into();
        self.outputs = digest_dir(dir)?;
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// The manifest with timing zeroed, for run-to-run comparison.
    pub fn without_timing(&self) -> Self {
        let mut m = self.clone();
        m.stages.iter_mut().for_each(|s| s.seconds = 0.0);
        m
    }
}
