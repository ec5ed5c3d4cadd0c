//! Run manifest: what a pipeline run produced, with content checksums so
//! reruns can be compared byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use bootviz_core::summary::{FlagDecision, SummaryRow};
use bootviz_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Path relative to the output directory.
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    /// Seed of the horizontal mask selection, when the mask has one.
    pub mask: Option<u64>,
    pub bootstrap: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_fingerprint: String,
    pub seeds: Seeds,
    /// Every emitted file, exactly once, in emission order.
    pub artifacts: Vec<ArtifactEntry>,
    pub summary: Vec<SummaryRow>,
    pub flag: Option<FlagDecision>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serialization");
        text.push('\n');
        text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|source| Error::Write {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn artifact(&self, file: &str) -> Option<&ArtifactEntry> {
        self.artifacts.iter().find(|a| a.file == file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let manifest = RunManifest {
            tool_version: "0.1.0".into(),
            config_fingerprint: "sha256:abc".into(),
            seeds: Seeds {
                mask: Some(7),
                bootstrap: 1,
            },
            artifacts: vec![ArtifactEntry {
                file: "recon.png".into(),
                sha256: "deadbeef".into(),
            }],
            summary: vec![SummaryRow {
                sigma: 0.0,
                rss: 1.0,
                rms: 0.1,
            }],
            flag: None,
            notes: vec!["note".into()],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        manifest.write(&path).unwrap();
        let back = RunManifest::from_json_file(&path).unwrap();
        assert_eq!(manifest, back);
        assert!(back.artifact("recon.png").is_some());
        assert!(back.artifact("missing.png").is_none());
    }
}
