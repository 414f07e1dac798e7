//! Batch evaluation over a parameter axis.
//!
//! Every requested cell yields exactly one row. Failures of a single
//! configuration (a cutoff that does not converge, a detector the packet
//! never reaches) become error rows; only an invalid spec fails the sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrival::{arrival_for, CurrentKind};
use crate::classical::{j_c, rho_c};
use crate::error::{Error, Result};
use crate::quantum::{j_q, rho_q};
use crate::units::{DetectorConfig, PacketParams};
use crate::wigner::wigner_closed;

/// The parameter varied across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "mass_amu")]
    MassAmu,
    #[serde(rename = "X")]
    X,
    #[serde(rename = "C")]
    C,
    #[serde(rename = "t")]
    T,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::MassAmu => "mass_amu",
            Axis::X => "X",
            Axis::C => "C",
            Axis::T => "t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    RhoQ,
    RhoC,
    JQ,
    JC,
    /// D_W(x, p̄, t) along the grid line.
    Wigner,
    TauQ,
    TauC,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::RhoQ => "rho_q",
            Quantity::RhoC => "rho_c",
            Quantity::JQ => "j_q",
            Quantity::JC => "j_c",
            Quantity::Wigner => "wigner",
            Quantity::TauQ => "tau_q",
            Quantity::TauC => "tau_c",
        }
    }

    /// One value per configuration rather than one per grid point.
    pub fn is_scalar(self) -> bool {
        matches!(self, Quantity::TauQ | Quantity::TauC)
    }
}

/// Which coordinate the grid runs along. Along `x` the time is the sweep's
/// evaluation time; along `t` the position is the detector X.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridVariable {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "t")]
    T,
}

impl GridVariable {
    pub fn name(self) -> &'static str {
        match self {
            GridVariable::X => "x",
            GridVariable::T => "t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub variable: GridVariable,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let n = self.count;
        (0..n).map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::validation("grid.count", "must be >= 2"));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::validation("grid", format!("need finite min < max, got [{}, {}]", self.min, self.max)));
        }
        Ok(())
    }
}

/// f sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn sample<F: Fn(f64) -> f64>(t: Vec<f64>, f: F) -> Self {
        let values = t.iter().map(|&t| f(t)).collect();
        TimeSeries { t, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: PacketParams,
    pub det: DetectorConfig,
    /// Evaluation time for grids along x, s.
    pub time: f64,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub outputs: Vec<Quantity>,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub axis_value: f64,
    /// `None` for scalar quantities.
    pub grid_value: Option<f64>,
    pub quantity: Quantity,
    /// The failure message for per-point errors.
    pub value: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepMetadata {
    pub code_version: String,
    pub seed: Option<u64>,
    /// Resolved configuration text, when the sweep came from a config file.
    pub resolved_config: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub grid_variable: GridVariable,
    pub rows: Vec<Row>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn error_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.value.is_err()).count()
    }
}

impl SweepSpec {
    fn outputs_sorted(&self) -> Vec<Quantity> {
        let mut q = self.outputs.clone();
        q.sort();
        q.dedup();
        q
    }

    /// Number of rows a complete result must contain.
    pub fn requested_cells(&self) -> usize {
        let outputs = self.outputs_sorted();
        let grid = outputs.iter().filter(|q| !q.is_scalar()).count();
        let scalar = outputs.len() - grid;
        self.values.len() * (grid * self.grid.count + scalar)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::validation("values", "axis value list is empty"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("values", "axis values must be finite"));
        }
        let increasing = self.values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::validation("values", "axis values must be strictly monotone"));
        }
        if self.outputs.is_empty() {
            return Err(Error::validation("outputs", "no quantities requested"));
        }
        if !(self.time.is_finite() && self.time >= 0.0) {
            return Err(Error::validation("time", format!("must be finite and >= 0, got {}", self.time)));
        }
        self.grid.validate()?;
        if self.grid.variable == GridVariable::T && self.grid.min < 0.0 {
            return Err(Error::validation("grid.min", "time grid must start at t >= 0"));
        }
        for &v in &self.values {
            self.configure(v)?;
        }
        Ok(())
    }

    /// Parameters, detector and evaluation time at one axis value.
    pub fn configure(&self, value: f64) -> Result<(PacketParams, DetectorConfig, f64)> {
        let (mut params, mut det, mut time) = (self.base, self.det, self.time);
        match self.axis {
            Axis::MassAmu => params = self.base.with_mass_amu(value)?,
            Axis::C => params = self.base.with_c(value)?,
            Axis::X => det = self.det.with_x(value)?,
            Axis::T => {
                if !(value >= 0.0) {
                    return Err(Error::validation("values", format!("time must be >= 0, got {value}")));
                }
                time = value;
            }
        }
        Ok((params, det, time))
    }
}

fn grid_quantity(q: Quantity, params: &PacketParams, x: f64, t: f64) -> f64 {
    match q {
        Quantity::RhoQ => rho_q(params, x, t),
        Quantity::RhoC => rho_c(params, x, t),
        Quantity::JQ => j_q(params, x, t),
        Quantity::JC => j_c(params, x, t),
        Quantity::Wigner => wigner_closed(params, x, params.mean_momentum(), t),
        Quantity::TauQ | Quantity::TauC => unreachable!("scalar quantity on a grid"),
    }
}

fn evaluate_point(spec: &SweepSpec, outputs: &[Quantity], grid: &[f64], value: f64) -> Vec<Row> {
    // validate() has already checked that every axis value configures
    let (params, det, time) = spec.configure(value).expect("validated axis value");
    let mut rows = Vec::new();
    for &q in outputs {
        if q.is_scalar() {
            let kind = if q == Quantity::TauQ { CurrentKind::Quantum } else { CurrentKind::Classical };
            let value_ = arrival_for(kind, &params, &det).map(|r| r.tau_bar).map_err(|e| e.to_string());
            rows.push(Row { axis_value: value, grid_value: None, quantity: q, value: value_ });
        } else {
            for &g in grid {
                let (x, t) = match spec.grid.variable {
                    GridVariable::X => (g, time),
                    GridVariable::T => (det.x, g),
                };
                rows.push(Row { axis_value: value, grid_value: Some(g), quantity: q, value: Ok(grid_quantity(q, &params, x, t)) });
            }
        }
    }
    rows
}

/// Evaluates every requested quantity at every axis value. Rows come out
/// ordered by axis value, then quantity, then grid point.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let outputs = spec.outputs_sorted();
    let grid = spec.grid.points();
    let mut values = spec.values.clone();
    values.sort_by(f64::total_cmp);
    let rows: Vec<Row> = values.par_iter().flat_map_iter(|&v| evaluate_point(spec, &outputs, &grid, v)).collect();
    Ok(SweepResult {
        axis: spec.axis,
        grid_variable: spec.grid.variable,
        rows,
        metadata: SweepMetadata { code_version: env!("CARGO_PKG_VERSION").to_string(), ..Default::default() },
    })
}
