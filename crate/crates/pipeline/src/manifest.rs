//! Content checksums: per-stage stamps for resuming and the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const STAMP_DIR: &str = ".stamps";

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub files: Vec<ManifestEntry>,
}

fn rel_string(rel: &Path) -> String {
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| PipelineError::io(dir, e))?;
        let path = entry.path();
        let name = entry.file_name();
        if name.to_string_lossy().starts_with('.') {
            continue;
        }
        if path.is_dir() {
            collect(root, &path, out)?;
        } else if path != root.join(MANIFEST_FILE) {
            out.push(path.strip_prefix(root).expect("under root").to_path_buf());
        }
    }
    Ok(())
}

/// Checksums every file under `out` except the manifest itself and
/// dot-directories, sorted by path.
pub fn build_manifest(out: &Path, config_hash: &str, seed: u64) -> Result<Manifest> {
    let mut files = Vec::new();
    collect(out, out, &mut files)?;
    let mut entries = files
        .iter()
        .map(|rel| {
            let full = out.join(rel);
            let bytes = std::fs::metadata(&full).map_err(|e| PipelineError::io(&full, e))?.len();
            Ok(ManifestEntry {
                path: rel_string(rel),
                sha256: sha256_file(&full)?,
                bytes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(Manifest {
        config_hash: config_hash.to_string(),
        seed,
        files: entries,
    })
}

pub fn write_manifest(out: &Path, config_hash: &str, seed: u64) -> Result<PathBuf> {
    let m = build_manifest(out, config_hash, seed)?;
    let path = out.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))?;
    Ok(path)
}

pub fn read_manifest(out: &Path) -> Result<Manifest> {
    let path = out.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|_| PipelineError::MissingArtifact(path.clone()))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::stage("manifest", format!("{}: {e}", path.display())))
}

/// Record of one completed stage: a key over the config and the stage's
/// inputs, followed by the checksum of every output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stamp {
    pub key: String,
    pub outputs: Vec<(String, String)>,
}

impl Stamp {
    /// Key for a stage given the config hash and its input files.
    pub fn key(stage: &str, config_hash: &str, out: &Path, inputs: &[PathBuf]) -> Result<String> {
        let mut h = Sha256::new();
        h.update(stage.as_bytes());
        h.update(b"\n");
        h.update(config_hash.as_bytes());
        for rel in inputs {
            let full = out.join(rel);
            if !full.is_file() {
                return Err(PipelineError::MissingArtifact(full));
            }
            h.update(b"\n");
            h.update(rel_string(rel).as_bytes());
            h.update(b" ");
            h.update(sha256_file(&full)?.as_bytes());
        }
        Ok(hex::encode(h.finalize()))
    }

    pub fn capture(key: String, out: &Path, outputs: &[PathBuf]) -> Result<Self> {
        let outputs = outputs
            .iter()
            .map(|rel| Ok((rel_string(rel), sha256_file(&out.join(rel))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { key, outputs })
    }

    fn path(out: &Path, stage: &str) -> PathBuf {
        out.join(STAMP_DIR).join(stage)
    }

    pub fn load(out: &Path, stage: &str) -> Option<Self> {
        let text = std::fs::read_to_string(Self::path(out, stage)).ok()?;
        let mut lines = text.lines();
        let key = lines.next()?.to_string();
        let outputs = lines
            .map(|l| l.split_once(' ').map(|(h, p)| (p.to_string(), h.to_string())))
            .collect::<Option<Vec<_>>>()?;
        Some(Self { key, outputs })
    }

    pub fn save(&self, out: &Path, stage: &str) -> Result<()> {
        let path = Self::path(out, stage);
        let dir = path.parent().expect("stamp dir");
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        let mut text = format!("{}\n", self.key);
        for (p, h) in &self.outputs {
            text.push_str(&format!("{h} {p}\n"));
        }
        std::fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))
    }

    /// Outputs recorded by the stamp, if every one is still on disk unchanged.
    pub fn intact_outputs(&self, out: &Path) -> Option<Vec<PathBuf>> {
        self.outputs
            .iter()
            .map(|(p, h)| {
                let full = out.join(p);
                (sha256_file(&full).ok()? == *h).then(|| PathBuf::from(p))
            })
            .collect()
    }
}
