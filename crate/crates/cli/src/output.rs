//! Output directory bookkeeping: tracked files, metadata sidecars and the
//! run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use nbundle_core::config::RunConfig;
use nbundle_core::observables::TimeSeries;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "NBUNDLE_OUT";
pub const DEFAULT_OUT_DIR: &str = "nbundle-out";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[derive(Debug, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub config: Option<String>,
    pub outputs: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes files under one directory and remembers them, so that a failed run
/// can remove what it produced and a successful one can list digests.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
    /// Subdirectory prepended to every name passed to `write`.
    prefix: PathBuf,
    command: String,
    started: Instant,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>, command: impl Into<String>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self {
            root,
            written: Vec::new(),
            prefix: PathBuf::new(),
            command: command.into(),
            started: Instant::now(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn set_prefix(&mut self, prefix: impl Into<PathBuf>) {
        self.prefix = prefix.into();
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(&self.prefix).join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        if !self.written.contains(&path) {
            self.written.push(path.clone());
        }
        Ok(path)
    }

    /// CSV plus a `.json` sidecar with parameters and provenance.
    pub fn write_series(
        &mut self,
        name: &str,
        series: &TimeSeries,
        cfg: Option<&RunConfig>,
        extra: Value,
    ) -> Result<()> {
        self.write(&format!("{name}.csv"), series.to_csv_string().as_bytes())?;
        let meta = self.sidecar(&format!("{name}.csv"), series.names(), cfg, extra);
        self.write_json(&format!("{name}.json"), &meta)
    }

    pub fn sidecar(
        &self,
        file: &str,
        columns: &[String],
        cfg: Option<&RunConfig>,
        extra: Value,
    ) -> Value {
        json!({
            "file": file,
            "columns": columns,
            "units": "dimensionless, omega_b = 1",
            "generator": format!("nbundle {}", VERSION),
            "command": self.command,
            "seed": cfg.map(|c| c.run.seed),
            "parameters": cfg.map(|c| c.to_toml_string()),
            "extra": extra,
        })
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())?;
        Ok(())
    }

    /// Removes every file written so far.
    pub fn discard(self) {
        for p in &self.written {
            let _ = std::fs::remove_file(p);
        }
    }

    /// Writes `manifest.json` listing all outputs with their digests.
    pub fn finish(self, cfg: Option<&RunConfig>, seed: Option<u64>) -> Result<PathBuf> {
        let mut outputs = Vec::with_capacity(self.written.len());
        for p in &self.written {
            let bytes = std::fs::read(p)?;
            outputs.push(ManifestEntry {
                path: p
                    .strip_prefix(&self.root)
                    .unwrap_or(p)
                    .to_string_lossy()
                    .replace('\\', "/"),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
        let manifest = RunManifest {
            version: VERSION.to_string(),
            command: self.command.clone(),
            seed,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            config: cfg.map(RunConfig::to_toml_string),
            outputs,
        };
        let path = self.root.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
