//! Batch workspace layout and the provenance manifest.
//!
//! A workspace root holds `trips/<route>/`, `dp/<route>/`, `policies/` and
//! `results/`. Every derived artifact gets a manifest entry naming its
//! exact inputs (path → content hash), a hash of the effective
//! configuration, and the tool version. Reruns with identical provenance
//! may overwrite; anything else requires `--force`. The manifest carries
//! no timestamps, so identical runs leave bit-identical workspaces.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("workspace io: {0}")]
    Io(String),
    #[error("manifest parse: {0}")]
    Parse(String),
    #[error(
        "artifact `{0}` exists with different provenance; rerun with --force to overwrite"
    )]
    ProvenanceConflict(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// Input path → sha256 of its content at build time.
    pub inputs: BTreeMap<String, String>,
    /// Hash of the effective command configuration.
    pub config_hash: String,
    pub tool_version: String,
    pub command: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub schema_version: u32,
    /// Artifact path (relative to the workspace root) → provenance.
    #[serde(default)]
    pub artifacts: BTreeMap<String, ArtifactRecord>,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, WorkspaceError> {
    let bytes = std::fs::read(path)
        .map_err(|e| WorkspaceError::Io(format!("{}: {e}", path.display())))?;
    Ok(sha256_bytes(&bytes))
}

/// Workspace directory layout.
#[derive(Clone, Debug)]
pub struct WorkspaceLayout {
    pub root: PathBuf,
}

impl WorkspaceLayout {
    pub fn new(root: impl Into<PathBuf>) -> WorkspaceLayout {
        WorkspaceLayout { root: root.into() }
    }

    /// Default root: `$EMSLAB_WORKSPACE` or `./emslab-workspace`.
    pub fn from_env() -> WorkspaceLayout {
        let root = std::env::var_os("EMSLAB_WORKSPACE")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("emslab-workspace"));
        WorkspaceLayout::new(root)
    }

    pub fn trips_dir(&self, route_id: &str) -> PathBuf {
        self.root.join("trips").join(route_id)
    }

    pub fn dp_dir(&self, route_id: &str) -> PathBuf {
        self.root.join("dp").join(route_id)
    }

    pub fn policies_dir(&self) -> PathBuf {
        self.root.join("policies")
    }

    pub fn results_dir(&self) -> PathBuf {
        self.root.join("results")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    pub fn load_manifest(&self) -> Result<Manifest, WorkspaceError> {
        let path = self.manifest_path();
        if !path.exists() {
            return Ok(Manifest {
                schema_version: MANIFEST_SCHEMA_VERSION,
                artifacts: BTreeMap::new(),
            });
        }
        let text = std::fs::read_to_string(&path)
            .map_err(|e| WorkspaceError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| WorkspaceError::Parse(e.to_string()))
    }

    pub fn save_manifest(&self, manifest: &Manifest) -> Result<(), WorkspaceError> {
        std::fs::create_dir_all(&self.root)
            .map_err(|e| WorkspaceError::Io(format!("{}: {e}", self.root.display())))?;
        let text = serde_json::to_string_pretty(manifest)
            .map_err(|e| WorkspaceError::Io(e.to_string()))?;
        std::fs::write(self.manifest_path(), text)
            .map_err(|e| WorkspaceError::Io(format!("{}: {e}", self.manifest_path().display())))
    }

    /// Artifact path relative to the root, for manifest keys.
    pub fn rel(&self, path: &Path) -> String {
        path.strip_prefix(&self.root).unwrap_or(path).to_string_lossy().replace('\\', "/")
    }

    /// Check a planned artifact against the manifest: an existing file with
    /// missing or different provenance is a conflict unless forced.
    pub fn check_artifact(
        &self,
        manifest: &Manifest,
        path: &Path,
        record: &ArtifactRecord,
        force: bool,
    ) -> Result<(), WorkspaceError> {
        if force || !path.exists() {
            return Ok(());
        }
        match manifest.artifacts.get(&self.rel(path)) {
            Some(existing) if existing == record => Ok(()),
            _ => Err(WorkspaceError::ProvenanceConflict(self.rel(path))),
        }
    }

    pub fn record_artifact(&self, manifest: &mut Manifest, path: &Path, record: ArtifactRecord) {
        manifest.artifacts.insert(self.rel(path), record);
    }
}
