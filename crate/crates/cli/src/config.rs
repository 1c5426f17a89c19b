//! Run configuration: strict JSON deserialization with the documented
//! defaults (t = 0.5, M = 40, R = 4, seed = 0). The field-level schema is
//! published in docs/formats.md.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CONFIG_SCHEMA: &str = "btlab-config/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// optional schema tag; when present it must match the shipped version
    #[serde(default)]
    pub schema: Option<String>,
    pub command: String,
    #[serde(default)]
    pub ctx: CtxConfig,
    /// inline symbol JSON, or {"file": "path"} pointing at one
    #[serde(default)]
    pub symbol: Option<serde_json::Value>,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(default)]
    pub quadrature: QuadConfig,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtxConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "default_n")]
    pub d: usize,
}

impl Default for CtxConfig {
    fn default() -> Self {
        CtxConfig { n: 1, t: 0.5, d: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    #[serde(default = "default_radial")]
    pub radial: usize,
    #[serde(default = "default_angular")]
    pub angular: usize,
    #[serde(default = "default_qtol")]
    pub tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { radial: 8, angular: 16, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// heat / smoothing time
    pub s: Option<f64>,
    /// phase-space grid radius R
    pub radius: Option<f64>,
    /// rotation angle for covariance checks
    pub theta: Option<f64>,
    /// cutoff ladder for dynamics runs
    pub cutoffs: Vec<usize>,
    /// oscillation-grid resolution
    pub resolution: Option<usize>,
    /// sampled pair count for identity checks
    pub pairs: Option<usize>,
    pub dynamics: Option<DynamicsConfig>,
    /// run directory consumed by the report command
    pub run_dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub total_time: f64,
    pub step: f64,
    #[serde(default = "default_integrator")]
    pub integrator: String,
    #[serde(default = "default_blow_up")]
    pub blow_up: f64,
    #[serde(default = "default_direction")]
    pub direction: String,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

fn default_cutoff() -> usize {
    40
}
fn default_n() -> usize {
    1
}
fn default_t() -> f64 {
    0.5
}
fn default_radial() -> usize {
    8
}
fn default_angular() -> usize {
    16
}
fn default_qtol() -> f64 {
    1e-10
}
fn default_integrator() -> String {
    "implicit-midpoint".into()
}
fn default_blow_up() -> f64 {
    1e8
}
fn default_direction() -> String {
    "paper".into()
}

pub const COMMANDS: &[&str] = &[
    "quantize", "heat", "check", "bcverify", "identities", "spectrum", "dynamics", "report",
];

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("config {} does not match the schema", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = &self.schema {
            if s != CONFIG_SCHEMA {
                bail!("unsupported config schema {s}; this build reads {CONFIG_SCHEMA}");
            }
        }
        if !COMMANDS.contains(&self.command.as_str()) {
            bail!("unknown command {:?}; expected one of {COMMANDS:?}", self.command);
        }
        if self.ctx.n == 0 || self.ctx.d == 0 || !(self.ctx.t > 0.0) {
            bail!("context needs n ≥ 1, d ≥ 1, t > 0");
        }
        if let Some(r) = self.params.radius {
            if !(r > 0.0) {
                bail!("radius must be positive");
            }
        }
        if let Some(d) = &self.params.dynamics {
            if !(d.total_time > 0.0 && d.step > 0.0 && d.blow_up > 1.0) {
                bail!("dynamics needs total_time > 0, step > 0, blow_up > 1");
            }
            if !matches!(d.integrator.as_str(), "implicit-midpoint" | "adaptive-rk") {
                bail!("integrator must be implicit-midpoint or adaptive-rk");
            }
            if !matches!(d.direction.as_str(), "paper" | "standard") {
                bail!("direction must be paper or standard");
            }
            if d.x.len() != self.ctx.n || d.xi.len() != self.ctx.n {
                bail!("dynamics initial state must have n = {} coordinates", self.ctx.n);
            }
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        self.params.radius.unwrap_or(4.0)
    }
}
