//! Run manifests and replay.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::experiments::{self, Outcome};
use crate::output::FileSet;
use crate::pool::worker_count;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub config: ExperimentConfig,
    /// `split(seed, i)` for replica i.
    pub seeds: Vec<u64>,
    pub workers: usize,
    pub wall_time_s: f64,
    pub censored: u64,
    #[serde(default)]
    pub flags: Vec<String>,
    /// sha256 of each output file.
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }
}

/// A finished run: its outputs and manifest, not yet written.
pub struct Run {
    pub outcome: Outcome,
    pub manifest: RunManifest,
}

pub fn execute(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Run> {
    let workers = match workers {
        Some(w) => w,
        None => worker_count(cfg.workers)?,
    };
    let start = Instant::now();
    let outcome = experiments::run(cfg, workers)?;
    let manifest = RunManifest {
        code_version: CODE_VERSION.to_string(),
        config: cfg.clone(),
        seeds: outcome.seeds.clone(),
        workers,
        wall_time_s: start.elapsed().as_secs_f64(),
        censored: outcome.censored,
        flags: outcome.flags.clone(),
        files: outcome.files.checksums(),
    };
    Ok(Run { outcome, manifest })
}

impl Run {
    /// Write outputs and the manifest into `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        self.outcome.files.write_all(dir)?;
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.manifest.to_json()?).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Result of replaying a manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub manifest: String,
    pub workers: usize,
    /// File name -> whether its checksum matches.
    pub files: BTreeMap<String, bool>,
}

impl ReplayReport {
    pub fn ok(&self) -> bool {
        !self.files.is_empty() && self.files.values().all(|&b| b)
    }
}

/// Re-run the configuration recorded in a manifest and compare checksums.
/// Refuses manifests written by another code version.
pub fn replay(path: &Path, workers: Option<usize>, out: Option<&Path>) -> Result<ReplayReport> {
    let m = RunManifest::load(path)?;
    if m.code_version != CODE_VERSION {
        bail!("manifest was written by version {} but this is {}; refusing to replay", m.code_version, CODE_VERSION);
    }
    let run = execute(&m.config, workers)?;
    if run.manifest.seeds != m.seeds {
        bail!("replica seeds differ from the manifest");
    }
    let got: &FileSet = &run.outcome.files;
    let sums = got.checksums();
    let mut files = BTreeMap::new();
    for (name, want) in &m.files {
        files.insert(name.clone(), sums.get(name) == Some(want));
    }
    for name in sums.keys().filter(|k| !m.files.contains_key(*k)) {
        files.insert(name.clone(), false);
    }
    if let Some(dir) = out {
        run.write(dir)?;
    }
    Ok(ReplayReport { manifest: path.display().to_string(), workers: run.manifest.workers, files })
}
