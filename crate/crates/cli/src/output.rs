//! Output directory, CSV/JSON writers and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::ConfigError;

/// Floats with 17 significant digits, enough to round-trip.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct ModelHash {
    pub model: String,
    pub size: usize,
    pub lambda: f64,
    pub dim: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub ptlab_version: &'static str,
    pub core_version: &'static str,
    pub threads: usize,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub models: Vec<ModelHash>,
    pub timings: Vec<Timing>,
    pub outputs: Vec<OutputRecord>,
}

pub struct OutputDir {
    root: PathBuf,
    outputs: Vec<OutputRecord>,
    timings: Vec<Timing>,
    pub models: Vec<ModelHash>,
}

impl OutputDir {
    /// Create the directory and make sure it can be written.
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| ConfigError(format!("out: cannot create {}: {e}", root.display())))?;
        let probe = root.join(".ptlab-write-probe");
        fs::write(&probe, b"")
            .and_then(|_| fs::remove_file(&probe))
            .map_err(|e| ConfigError(format!("out: {} is not writable: {e}", root.display())))?;
        Ok(OutputDir { root: root.to_path_buf(), outputs: Vec::new(), timings: Vec::new(), models: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn record(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(OutputRecord {
            file: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// Write a CSV file from a header and rows of already formatted fields.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.record(name, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.record(name, &bytes)
    }

    /// Run `f` and record its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f()?;
        self.timings.push(Timing { stage: stage.to_string(), seconds: t.elapsed().as_secs_f64() });
        Ok(out)
    }

    pub fn add_timing(&mut self, stage: &str, seconds: f64) {
        self.timings.push(Timing { stage: stage.to_string(), seconds });
    }

    /// Write `manifest.json` listing every file written so far.
    pub fn finish(mut self, command: &str, threads: usize, seed: Option<u64>, config: serde_json::Value) -> Result<()> {
        let manifest = Manifest {
            command: command.to_string(),
            ptlab_version: env!("CARGO_PKG_VERSION"),
            core_version: ptlab_core::VERSION,
            threads,
            seed,
            config,
            models: std::mem::take(&mut self.models),
            timings: std::mem::take(&mut self.timings),
            outputs: std::mem::take(&mut self.outputs),
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.path("manifest.json");
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
    }
}
