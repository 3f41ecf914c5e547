//! Run manifests: what was run, from which inputs, producing which files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use symdec_core::artifact::sha256_file;

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub role: String,
    /// Inputs: absolute path, or `builtin:<name>` for built-in codes.
    /// Outputs: path relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub subcommand: String,
    pub config: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub deterministic: bool,
    /// Subcommand options that are not part of the configuration.
    pub options: BTreeMap<String, String>,
    pub inputs: Vec<ArtifactRef>,
    pub outputs: Vec<ArtifactRef>,
    pub duration_secs: f64,
    pub metrics: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Validation(e.to_string()))?;
        fs::write(&path, json + "\n")?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn input(&self, role: &str) -> Option<&ArtifactRef> {
        self.inputs.iter().find(|a| a.role == role)
    }

    pub fn inputs_with_role<'a>(&'a self, role: &'a str) -> impl Iterator<Item = &'a ArtifactRef> + 'a {
        self.inputs.iter().filter(move |a| a.role == role)
    }

    pub fn output(&self, role: &str) -> Option<&ArtifactRef> {
        self.outputs.iter().find(|a| a.role == role)
    }
}

/// Short run id from wall-clock seconds and the manifest contents.
pub fn make_run_id(subcommand: &str, config_text: &str) -> String {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .unwrap_or_default();
    let stamp = format!("{subcommand}\n{config_text}\n{}\n{}", now.as_nanos(), std::process::id());
    let digest = symdec_core::artifact::sha256_hex(stamp.as_bytes());
    format!("{}-{}", now.as_secs(), &digest[..8])
}

pub fn output_ref(dir: &Path, role: &str, file: &str) -> Result<ArtifactRef> {
    Ok(ArtifactRef {
        role: role.into(),
        path: file.into(),
        sha256: sha256_file(&dir.join(file))?,
    })
}

/// Checks that every output exists and matches its recorded hash, and that
/// file inputs are unchanged. Returns one line per artifact.
pub fn verify_manifest(path: &Path) -> Result<Vec<String>> {
    let manifest = RunManifest::load(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut report = Vec::new();
    let mut failures = Vec::new();
    let files = manifest
        .outputs
        .iter()
        .map(|a| (a, dir.join(&a.path)))
        .chain(
            manifest
                .inputs
                .iter()
                .filter(|a| !a.path.starts_with("builtin:") && a.path != "exact")
                .map(|a| (a, PathBuf::from(&a.path))),
        );
    for (a, file) in files {
        let status = match sha256_file(&file) {
            Ok(h) if h == a.sha256 => "OK",
            Ok(_) => "HASH MISMATCH",
            Err(_) => "MISSING",
        };
        if status != "OK" {
            failures.push(format!("{} ({})", a.path, status));
        }
        report.push(format!("{status} {} {}", a.role, file.display()));
    }
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(CliError::Validation(format!("manifest check failed: {}", failures.join(", "))))
    }
}
