use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

/// Provenance record written next to every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub flags: serde_json::Value,
    pub seeds: Vec<u64>,
    /// Path to SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, flags: &impl Serialize, seeds: Vec<u64>) -> Self {
        RunManifest {
            schema_version: geomnet::format::SCHEMA_VERSION,
            tool: "geomnet",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            flags: serde_json::to_value(flags).expect("flags serialize"),
            seeds,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = read_bytes(path)?;
        self.inputs.insert(path.display().to_string(), digest(&bytes));
        Ok(())
    }

    pub fn output(&mut self, path: &Path, contents: &[u8]) {
        self.outputs.insert(path.display().to_string(), digest(contents));
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_file(path, geomnet::format::to_json(self).as_bytes())
    }
}

pub fn digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| CliError::Io { path: parent.to_path_buf(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Writes an artifact and records its digest.
pub fn emit(manifest: &mut RunManifest, path: &Path, contents: &[u8]) -> CliResult<()> {
    write_file(path, contents)?;
    manifest.output(path, contents);
    Ok(())
}

/// Manifest location for a file artifact.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".run.json");
    PathBuf::from(s)
}

pub const DIR_MANIFEST: &str = "run_manifest.json";
