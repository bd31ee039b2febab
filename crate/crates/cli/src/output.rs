//! Artifact tree of a run: `manifest.json`, `metrics.csv`, `report.json`, `snapshots/`.

use serde::Serialize;
use serde_json::Value;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub root_seed: u64,
    pub realization_count: usize,
}

/// Single writer for everything a run produces. Metric rows are flushed as they arrive.
pub struct Artifacts {
    dir: PathBuf,
    metrics: BufWriter<File>,
}

impl Artifacts {
    pub fn create(manifest: &RunManifest, config: &Value, header: &str) -> std::io::Result<Self> {
        let dir = manifest.output_dir.clone();
        std::fs::create_dir_all(dir.join("snapshots"))?;
        let doc = serde_json::json!({
            "manifest": manifest,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
        });
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
        let mut metrics = BufWriter::new(File::create(dir.join("metrics.csv"))?);
        writeln!(metrics, "{header}")?;
        metrics.flush()?;
        Ok(Self { dir, metrics })
    }

    pub fn row(&mut self, line: &str) -> std::io::Result<()> {
        writeln!(self.metrics, "{line}")?;
        self.metrics.flush()
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn snapshots(&self) -> PathBuf {
        self.dir.join("snapshots")
    }

    pub fn write_report(&self, report: &Value) -> std::io::Result<()> {
        std::fs::write(self.dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")
    }
}
