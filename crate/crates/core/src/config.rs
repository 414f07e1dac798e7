//! TOML run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::{Axis, GridSpec, Quantity, SweepSpec};
use crate::units::{make_params, CutoffPolicy, DetectorConfig, PacketParams, HBAR_CGS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    /// cm
    pub sigma0: f64,
    /// cm/s
    pub u: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub mass_amu: f64,
    /// erg·s
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

fn default_hbar() -> f64 {
    HBAR_CGS
}

impl PacketSection {
    pub fn params(&self) -> Result<PacketParams> {
        let p = make_params(self.sigma0, self.u, self.c, self.mass_amu)?;
        PacketParams::new(p.sigma0, p.u, p.c, p.mass, self.hbar)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    /// cm
    #[serde(rename = "X", default)]
    pub x: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: CutoffPolicy,
    #[serde(default = "default_rel_tol")]
    pub quad_rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub quad_abs_tol: f64,
    #[serde(default = "default_iters")]
    pub max_cutoff_iters: usize,
}

fn default_cutoff() -> CutoffPolicy {
    CutoffPolicy::ThreeSigma
}
fn default_rel_tol() -> f64 {
    DetectorConfig::DEFAULT_REL_TOL
}
fn default_abs_tol() -> f64 {
    DetectorConfig::DEFAULT_ABS_TOL
}
fn default_iters() -> usize {
    DetectorConfig::DEFAULT_MAX_CUTOFF_ITERS
}

impl Default for DetectorSection {
    fn default() -> Self {
        DetectorSection {
            x: 0.0,
            cutoff: default_cutoff(),
            quad_rel_tol: default_rel_tol(),
            quad_abs_tol: default_abs_tol(),
            max_cutoff_iters: default_iters(),
        }
    }
}

impl DetectorSection {
    pub fn detector(&self) -> Result<DetectorConfig> {
        DetectorConfig::new(self.x, self.cutoff, self.quad_rel_tol, self.quad_abs_tol, self.max_cutoff_iters)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub outputs: Vec<Quantity>,
    /// Evaluation time for grids along x, s.
    #[serde(default)]
    pub time: f64,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// CSV destination; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub packet: PacketSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSection>,
}

/// Problems loading a configuration file.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("config `{path}`: {source}")]
    Invalid { path: String, source: Error },
}

impl RunConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Reads and fully validates a configuration file.
    pub fn load(path: &Path) -> std::result::Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: shown.clone(), source })?;
        let cfg = RunConfig::parse(&text).map_err(|e| ConfigError::Parse { path: shown.clone(), message: e.to_string() })?;
        cfg.validate().map_err(|source| ConfigError::Invalid { path: shown, source })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.packet.params()?;
        self.detector.detector()?;
        if let Some(mc) = &self.mc {
            if mc.count < 1 {
                return Err(Error::validation("mc.count", "must be >= 1"));
            }
        }
        if self.sweep.is_some() {
            self.sweep_spec()?.validate()?;
        }
        Ok(())
    }

    /// The sweep described by this configuration.
    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let s = self.sweep.as_ref().ok_or_else(|| Error::validation("sweep", "configuration has no [sweep] section"))?;
        Ok(SweepSpec {
            base: self.packet.params()?,
            det: self.detector.detector()?,
            time: s.time,
            axis: s.axis,
            values: s.values.clone(),
            outputs: s.outputs.clone(),
            grid: s.grid,
        })
    }

    /// Canonical TOML text with every default filled in.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }
}
