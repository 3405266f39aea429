//! Run manifests: a JSON sidecar next to each primary artifact recording how
//! it was produced. `out.csv` is described by `out.csv.manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn digest(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub timestamp: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileDigest>,
    pub artifacts: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], config: serde_json::Value) -> RunManifest {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            argv: argv.to_vec(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn seed(mut self, name: &str, value: u64) -> RunManifest {
        self.seeds.insert(name.into(), value);
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.push(digest(path)?);
        Ok(())
    }

    pub fn artifact(&mut self, path: &Path) -> Result<(), CliError> {
        self.artifacts.push(digest(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        fs::write(path, text + "\n").map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })
    }
}

pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// File name of the manifest as referenced from inside the artifact.
pub fn manifest_name(artifact: &Path) -> String {
    manifest_path(artifact)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_naming() {
        assert_eq!(manifest_path(Path::new("out/model.json")), PathBuf::from("out/model.json.manifest.json"));
        assert_eq!(manifest_name(Path::new("out/model.json")), "model.json.manifest.json");
    }

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        fs::write(&p, "abc").unwrap();
        let d = digest(&p).unwrap();
        assert_eq!(d.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(d.bytes, 3);
    }
}
