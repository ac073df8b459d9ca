//! Experiment runner for two-type diffusion-limited annihilating systems:
//! TOML configs, a deterministic replica pool, CSV/JSON outputs with
//! checksummed manifests, and the `annihilate-lab` command line.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod manifest;
pub mod output;
pub mod pool;

pub use config::{ExperimentConfig, ExperimentKind};
pub use manifest::{execute, replay, RunManifest};
