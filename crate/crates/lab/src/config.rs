//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use dlas_core::GraphSpec;
use serde::{Deserialize, Serialize};

/// Default truncation constant on lattices and tori.
pub const LATTICE_C: f64 = 2.0;
/// Default truncation constant on the tree.
pub const TREE_C: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CriticalLine,
    SubcriticalLine,
    TorusCompare,
    Tree,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CriticalLine => "critical-line",
            ExperimentKind::SubcriticalLine => "subcritical-line",
            ExperimentKind::TorusCompare => "torus-compare",
            ExperimentKind::Tree => "tree",
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// `line`, `lattice:d`, `torus:d:r` or `bitree:d:n`.
    pub graph: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default = "one")]
    pub lambda_a: f64,
    #[serde(default)]
    pub lambda_b: f64,
    /// Sample times (critical line, torus) or horizons for tree V_t.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t_grid: Vec<f64>,
    /// Depths for the exact tree fit.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_grid: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub p_grid: Vec<f64>,
    /// Distances 1/2 - p for the subcritical tree limits.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eps_grid: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Also record the A-density over the central half-window.
    #[serde(default)]
    pub window: bool,
    /// Subcritical line: largest p at which the Monte Carlo is run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_p_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_cap: Option<u64>,
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn graph_spec(&self) -> Result<GraphSpec> {
        Ok(self.graph.parse::<GraphSpec>()?)
    }

    pub fn truncation_c(&self) -> Result<f64> {
        Ok(self.truncation_c.unwrap_or(match self.graph_spec()? {
            GraphSpec::BiTree { .. } => TREE_C,
            _ => LATTICE_C,
        }))
    }

    pub fn p(&self) -> Result<f64> {
        match self.p {
            Some(p) if (0.0..=1.0).contains(&p) => Ok(p),
            Some(p) => bail!("p must lie in [0, 1], got {p}"),
            None => bail!("experiment {} needs p", self.experiment.name()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.graph_spec()?;
        ensure!(self.replicas >= 2, "need at least 2 replicas");
        ensure!(self.lambda_a >= 0.0 && self.lambda_b >= 0.0, "rates must be non-negative");
        ensure!(self.lambda_a > 0.0 || self.lambda_b > 0.0, "at least one rate must be positive");
        ensure!(strictly_increasing(&self.t_grid), "t_grid must be strictly increasing");
        ensure!(self.t_grid.iter().all(|t| t.is_finite() && *t > 0.0), "t_grid entries must be positive");
        ensure!(self.n_grid.windows(2).all(|w| w[0] < w[1]), "n_grid must be strictly increasing");
        if let Some(c) = self.truncation_c {
            ensure!(c >= 1.0, "truncation constant below 1 would cut the region inside sqrt(t)");
        }
        if let Some(w) = self.workers {
            ensure!(w >= 1, "workers must be at least 1");
        }
        match self.experiment {
            ExperimentKind::CriticalLine => {
                ensure!(matches!(g, GraphSpec::Line | GraphSpec::Lattice { .. }), "critical-line runs on the line or a lattice");
                self.p()?;
                ensure!(!self.t_grid.is_empty(), "critical-line needs t_grid");
                ensure!(self.t_grid[0] >= 2.0, "t_grid must start at 2 or later");
            }
            ExperimentKind::SubcriticalLine => {
                ensure!(g == GraphSpec::Line, "subcritical-line runs on the line");
                ensure!(self.lambda_b == 0.0, "subcritical-line needs lambda_b = 0");
                ensure!(!self.p_grid.is_empty(), "subcritical-line needs p_grid");
                ensure!(strictly_increasing(&self.p_grid), "p_grid must be strictly increasing");
                ensure!(self.p_grid.iter().all(|&p| p > 0.25 && p < 0.5), "p_grid entries must lie in (1/4, 1/2)");
            }
            ExperimentKind::TorusCompare => {
                ensure!(matches!(g, GraphSpec::Line | GraphSpec::Lattice { .. }), "torus-compare takes the lattice it compares against");
                self.p()?;
                ensure!(!self.t_grid.is_empty(), "torus-compare needs t_grid");
                ensure!(self.t_grid[0] >= 2.0, "t_grid must start at 2 or later");
            }
            ExperimentKind::Tree => {
                ensure!(matches!(g, GraphSpec::BiTree { .. }), "tree experiment needs graph bitree:d:n");
                ensure!(self.lambda_b == 0.0, "tree experiment needs lambda_b = 0");
                self.p()?;
                ensure!(self.eps_grid.iter().all(|&e| e > 0.0 && e < 0.5), "eps_grid entries must lie in (0, 1/2)");
                ensure!(self.t_grid.iter().all(|&t| t >= 2.0), "tree t_grid entries must be at least 2");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"
experiment = "critical-line"
graph = "line"
p = 0.5
t_grid = [4.0, 8.0, 16.0]
replicas = 8
seed = 1
"#;

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::from_toml(MIN).unwrap();
        assert_eq!(c.lambda_a, 1.0);
        assert_eq!(c.truncation_c().unwrap(), LATTICE_C);
        let again = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn rejects_bad_grids() {
        let bad = MIN.replace("[4.0, 8.0, 16.0]", "[8.0, 4.0]");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = MIN.replace("replicas = 8", "replicas = 1");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = MIN.replace("seed = 1", "seed = 1\nradius = 3");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }
}
