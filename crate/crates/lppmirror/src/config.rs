//! Run configuration read from a TOML file.
//!
//! ```toml
//! seed = 7
//!
//! [walk]
//! m = 12
//! p = 0.4
//! q = 0.3
//! t_star = 0.5
//! c = 0.1            # delta defaults to (1 - c) / m
//!
//! [graph]
//! n = 800
//!
//! [mc]
//! replicates = 500
//! pipelines = ["mirror_dim_1", "iso_mirror_2", "sqrt_avg_degree"]
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use lppmirror_core::pipeline::Signal;
use lppmirror_core::WalkConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub walk: WalkSection,
    pub graph: GraphSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detect: Option<DetectSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSection {
    pub m: usize,
    pub p: f64,
    pub q: f64,
    #[serde(default = "default_t_star")]
    pub t_star: f64,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

fn default_t_star() -> f64 {
    0.5
}

fn default_c() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub replicates: usize,
    #[serde(default = "default_pipelines")]
    pub pipelines: Vec<String>,
    #[serde(default = "default_ase_dim")]
    pub ase_dim: usize,
    /// Overrides `graph.n` with a grid of vertex counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    /// Overrides `walk.m` with a grid of time counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_values: Option<Vec<usize>>,
}

fn default_pipelines() -> Vec<String> {
    vec!["mirror_dim_1".into()]
}

fn default_ase_dim() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub d_values: Vec<usize>,
    pub replicates: usize,
    #[serde(default = "default_ase_dim")]
    pub ase_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectSection {
    pub replicates: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_ase_dim")]
    pub ase_dim: usize,
    /// Jump probability of the null walk; defaults to `walk.p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_p: Option<f64>,
    /// Fresh alternative replicates for an empirical rejection rate; 0 skips it.
    #[serde(default)]
    pub power_replicates: usize,
}

fn default_level() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.walk_config()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    /// The walk at `walk.m`.
    pub fn walk_config(&self) -> Result<WalkConfig> {
        self.walk_config_at(self.walk.m)
    }

    /// The walk with `m` sampled times; an explicit `delta` is kept as given.
    pub fn walk_config_at(&self, m: usize) -> Result<WalkConfig> {
        let w = &self.walk;
        let mut cfg = WalkConfig::scaled(m, w.p, w.q, w.t_star, w.c, self.seed);
        if let Some(delta) = w.delta {
            cfg.delta = delta;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The same walk with `q = p` (or `null_p` for both).
    pub fn null_walk_config(&self) -> Result<WalkConfig> {
        self.null_walk_config_at(self.walk.m)
    }

    /// [`Self::null_walk_config`] with `m` sampled times.
    pub fn null_walk_config_at(&self, m: usize) -> Result<WalkConfig> {
        let mut cfg = self.walk_config_at(m)?;
        let p = self.detect.as_ref().and_then(|d| d.null_p).unwrap_or(cfg.p);
        cfg.p = p;
        cfg.q = p;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses a pipeline tag such as `mirror_dim_1`, `iso_mirror_3`,
/// `sqrt_avg_degree` or `edge_density`.
pub fn parse_pipeline(tag: &str) -> Result<Signal> {
    match tag {
        "mirror_dim_1" => Ok(Signal::MirrorDim1),
        "sqrt_avg_degree" => Ok(Signal::SqrtAvgDegree),
        "edge_density" => Ok(Signal::EdgeDensity),
        _ => tag
            .strip_prefix("iso_mirror_")
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|d| *d >= 1)
            .map(Signal::IsoMirror)
            .ok_or_else(|| Error::Config(format!("unknown pipeline `{tag}`"))),
    }
}
