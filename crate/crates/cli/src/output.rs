//! Output directory handling and the run manifest.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// Records everything needed to rerun an experiment: the full config
/// (seeds included), its hash, the tool version and the emitted files.
#[derive(Serialize)]
struct Manifest<'a> {
    name: &'a str,
    tool_version: &'a str,
    config_sha256: String,
    config: &'a ExperimentConfig,
    files: &'a [String],
}

pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Open a file inside the output directory and register it in the
    /// manifest file list.
    pub fn register(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn write_string(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.register(name);
        std::fs::write(&path, contents)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write_string(name, &(text + "\n"))
    }

    /// Write `manifest.json` recording the canonical config and every
    /// file emitted so far.
    pub fn finish(mut self, config: &ExperimentConfig) -> Result<()> {
        let canonical = serde_json::to_string(config)?;
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let mut files = self.files.clone();
        files.push("manifest.json".to_string());
        let manifest = Manifest {
            name: &config.name,
            tool_version: env!("CARGO_PKG_VERSION"),
            config_sha256: hex,
            config,
            files: &files,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push("manifest.json".into());
        Ok(())
    }
}
