//! Artifact writing and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thermoflow::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub thermoflow: &'static str,
    pub rustc: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub system_hash: Option<String>,
    pub seed: u64,
    pub threads: usize,
    pub versions: Versions,
    pub wall_time_s: f64,
    pub artifacts: Vec<Artifact>,
    pub summary: serde_json::Value,
}

/// Single writer for one output directory.
pub struct Output {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
    start: Instant,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
            start: Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.artifacts.push(Artifact {
            file: name.into(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write(name, text.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.text(name, &text)
    }

    /// Registers files written by a library routine under `dir`.
    pub fn record(&mut self, name: &str) -> Result<()> {
        let bytes = fs::read(self.dir.join(name))?;
        self.artifacts.push(Artifact {
            file: name.into(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn finish(
        self,
        command: &str,
        config_hash: String,
        system_hash: Option<String>,
        seed: u64,
        summary: serde_json::Value,
    ) -> Result<Manifest> {
        let manifest = Manifest {
            command: command.into(),
            config_hash,
            system_hash,
            seed,
            threads: rayon::current_num_threads(),
            versions: Versions {
                thermoflow: env!("CARGO_PKG_VERSION"),
                rustc: env!("THERMOFLOW_RUSTC_VERSION"),
            },
            wall_time_s: self.start.elapsed().as_secs_f64(),
            artifacts: self.artifacts,
            summary,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}
