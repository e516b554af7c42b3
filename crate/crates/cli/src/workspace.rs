//! On-disk artifacts with a manifest of the config hash that produced each.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub stage: String,
    pub config_hash: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: BTreeMap<String, ArtifactRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of a serializable value's JSON form.
pub fn hash_json(value: &impl Serialize) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("serializable"))
}

#[derive(Debug)]
pub struct Workspace {
    root: PathBuf,
    manifest: Manifest,
}

impl Workspace {
    pub fn open(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| PipelineError::io(root, e))?;
        let path = root.join(MANIFEST);
        let manifest = if path.is_file() {
            let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
            serde_json::from_str(&text).map_err(|source| PipelineError::Json {
                name: MANIFEST.into(),
                source,
            })?
        } else {
            Manifest::default()
        };
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn record(&self, name: &str) -> Option<&ArtifactRecord> {
        self.manifest.artifacts.get(name)
    }

    /// Present on disk, unmodified, and produced under `config_hash`.
    pub fn is_fresh(&self, name: &str, config_hash: &str) -> bool {
        let Some(rec) = self.record(name) else {
            return false;
        };
        rec.config_hash == config_hash
            && std::fs::read(self.path(name)).is_ok_and(|bytes| sha256_hex(&bytes) == rec.sha256)
    }

    pub fn write_bytes(&mut self, name: &str, stage: &str, config_hash: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| PipelineError::io(&path, e))?;
        self.manifest.artifacts.insert(
            name.to_string(),
            ArtifactRecord {
                stage: stage.to_string(),
                config_hash: config_hash.to_string(),
                sha256: sha256_hex(bytes),
            },
        );
        self.save_manifest()
    }

    pub fn write_json(&mut self, name: &str, stage: &str, config_hash: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|source| PipelineError::Json {
            name: name.into(),
            source,
        })?;
        text.push('\n');
        self.write_bytes(name, stage, config_hash, text.as_bytes())
    }

    /// Drop the records of every artifact a stage produced.
    pub fn forget_stage(&mut self, stage: &str) {
        self.manifest.artifacts.retain(|_, r| r.stage != stage);
    }

    /// Names recorded for `stage`, in order.
    pub fn stage_artifacts(&self, stage: &str) -> Vec<String> {
        self.manifest
            .artifacts
            .iter()
            .filter(|(_, r)| r.stage == stage)
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Every artifact of `stage` is fresh under `config_hash`, and there is at least one.
    pub fn stage_fresh(&self, stage: &str, config_hash: &str) -> bool {
        let names = self.stage_artifacts(stage);
        !names.is_empty() && names.iter().all(|n| self.is_fresh(n, config_hash))
    }

    /// Register a file written by other means.
    pub fn adopt(&mut self, name: &str, stage: &str, config_hash: &str) -> Result<()> {
        let path = self.path(name);
        let bytes = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
        self.manifest.artifacts.insert(
            name.to_string(),
            ArtifactRecord {
                stage: stage.to_string(),
                config_hash: config_hash.to_string(),
                sha256: sha256_hex(&bytes),
            },
        );
        self.save_manifest()
    }

    /// Fail unless `name` exists and, when `expected` is given, was produced
    /// under that hash.
    pub fn require(&self, name: &str, stage: &'static str, expected: Option<&str>) -> Result<PathBuf> {
        let path = self.path(name);
        if !path.is_file() {
            return Err(PipelineError::MissingArtifact {
                name: name.into(),
                stage,
            });
        }
        if let Some(h) = expected {
            if !self.is_fresh(name, h) {
                return Err(PipelineError::StaleArtifact {
                    name: name.into(),
                    stage,
                });
            }
        }
        Ok(path)
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str, stage: &'static str, expected: Option<&str>) -> Result<T> {
        let path = self.require(name, stage, expected)?;
        let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|source| PipelineError::Json {
            name: name.into(),
            source,
        })
    }

    fn save_manifest(&self) -> Result<()> {
        let path = self.path(MANIFEST);
        let text = serde_json::to_string_pretty(&self.manifest).expect("serializable") + "\n";
        std::fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn freshness_tracks_hash_and_content() {
        let dir = tempfile::tempdir().unwrap();
        let mut ws = Workspace::open(dir.path()).unwrap();
        ws.write_json("a/x.json", "stage", "h1", &serde_json::json!({"v": 1}))
            .unwrap();
        assert!(ws.is_fresh("a/x.json", "h1"));
        assert!(!ws.is_fresh("a/x.json", "h2"));
        assert!(ws.require("a/x.json", "stage", Some("h1")).is_ok());
        assert!(matches!(
            ws.require("a/x.json", "stage", Some("h2")),
            Err(PipelineError::StaleArtifact { .. })
        ));
        std::fs::write(ws.path("a/x.json"), "{}").unwrap();
        assert!(!ws.is_fresh("a/x.json", "h1"));
        let reopened = Workspace::open(dir.path()).unwrap();
        assert_eq!(reopened.record("a/x.json").unwrap().config_hash, "h1");
        assert!(matches!(
            reopened.require("nope.json", "weigh", None),
            Err(PipelineError::MissingArtifact { stage: "weigh", .. })
        ));
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
