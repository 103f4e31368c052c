use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Written before any computation: everything needed to replay a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub output_dir: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
}

fn digest_file(path: &Path) -> Result<InputDigest, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Digests of a file, or of every regular file directly inside a directory.
pub fn digest_inputs(paths: &[&Path]) -> Result<Vec<InputDigest>, CliError> {
    let mut out = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            for f in files {
                out.push(digest_file(&f)?);
            }
        } else {
            out.push(digest_file(path)?);
        }
    }
    Ok(out)
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, out: &Path, config: impl Serialize, inputs: Vec<InputDigest>) -> Result<Self, CliError> {
        Ok(Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            output_dir: out.display().to_string(),
            config: serde_json::to_value(config).map_err(|e| CliError::runtime(e.to_string()))?,
            inputs,
        })
    }

    pub fn write(&self, out: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::runtime(e.to_string()))?;
        text.push('\n');
        let path = out.join(MANIFEST_FILE);
        fs::write(&path, text).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
    }
}
