//! Atomic output writing and the run manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::error::RunError;
use crate::scenario::Outputs;

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub kind: &'a str,
    pub parameter_hash: String,
    pub version: &'a str,
    pub anchor: &'a str,
    pub tolerance_scale: f64,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes every output file, `report.txt` and `manifest.json` into `dir`.
/// All contents are staged in temporary files first, so a failure leaves
/// no partial outputs behind.
pub fn write_all(dir: &Path, outputs: &Outputs, mut manifest: Manifest<'_>) -> Result<Vec<String>, RunError> {
    fs::create_dir_all(dir)?;
    let mut files: Vec<(String, Vec<u8>)> = outputs.files.clone();
    files.push(("report.txt".into(), outputs.report.clone().into_bytes()));
    manifest.files = files
        .iter()
        .map(|(name, bytes)| FileEntry { name: name.clone(), sha256: sha256_hex(bytes) })
        .collect();
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(std::io::Error::other)?;
    json.push(b'\n');
    files.push(("manifest.json".into(), json));

    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in &files {
        let mut tmp = NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        staged.push((name, tmp));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (name, tmp) in staged {
        tmp.persist(dir.join(name)).map_err(|e| e.error)?;
        written.push(name.clone());
    }
    Ok(written)
}
