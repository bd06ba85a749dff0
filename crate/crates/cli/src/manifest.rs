//! Run manifests: what ran, how long each stage took, and a SHA-256 per
//! output file.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// The resolved config, defaults included.
    pub config: serde_json::Value,
    pub workers: Option<usize>,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<OutputFile>,
    pub pass: bool,
    pub exit_code: i32,
    pub summary: String,
    pub failure: Option<StageFailure>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn describe_file(dir: &Path, name: &str) -> io::Result<OutputFile> {
    let bytes = fs::read(dir.join(name))?;
    Ok(OutputFile {
        path: name.to_string(),
        bytes: bytes.len() as u64,
        sha256: sha256_hex(&bytes),
    })
}

/// Re-reads every listed output and compares size and checksum.
/// Returns the paths that are missing or differ.
pub fn verify_outputs(dir: &Path, manifest: &RunManifest) -> Vec<String> {
    manifest
        .outputs
        .iter()
        .filter(|o| match describe_file(dir, &o.path) {
            Ok(now) => now != **o,
            Err(_) => true,
        })
        .map(|o| o.path.clone())
        .collect()
}

pub fn read_manifest(dir: &Path) -> io::Result<RunManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
