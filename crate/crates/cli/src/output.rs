use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance record written next to every output as `<file>.meta.json`.
#[derive(Debug, Serialize)]
pub struct Provenance<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_sha256: &'a str,
}

pub struct OutputDir {
    root: PathBuf,
    command: String,
    config_hash: String,
}

pub fn config_hash(canonical: &[u8]) -> String {
    hex::encode(Sha256::digest(canonical))
}

impl OutputDir {
    pub fn new(root: PathBuf, command: &str, config_hash: String) -> Result<Self> {
        fs::create_dir_all(&root)
            .with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(OutputDir {
            root,
            command: command.to_string(),
            config_hash,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.write_sidecar(&path)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        let meta = Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            config_sha256: &self.config_hash,
        };
        let mut name = path.as_os_str().to_owned();
        name.push(".meta.json");
        let mut bytes = serde_json::to_vec_pretty(&meta)?;
        bytes.push(b'\n');
        fs::write(PathBuf::from(&name), bytes)
            .with_context(|| format!("cannot write {}", PathBuf::from(&name).display()))?;
        Ok(())
    }
}
