//! Mean arrival time at a detector from the flux through it.
//!
//! The time integrals run over [0, T]. Under [`CutoffPolicy::ThreeSigma`], T
//! solves T = (X + 3σ(T))/u with σ the quantum packet width; the same T is
//! used whichever current is integrated.

use crate::classical::{classical_width, j_c};
use crate::error::{Error, Result};
use crate::quad::{clip_breaks, fixed_grid, integrate_breaks, QuadOptions};
use crate::quantum::{j_q, spread};
use crate::units::{CutoffPolicy, DetectorConfig, PacketParams};

/// Relative change between successive cutoff iterates accepted as converged.
pub const CUTOFF_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalResult {
    /// Mean arrival time, s.
    pub tau_bar: f64,
    /// Upper limit of the time integrals, s.
    pub t_cutoff: f64,
    /// ∫|J| t dt over [0, T].
    pub numerator: f64,
    /// ∫|J| dt over [0, T].
    pub denominator: f64,
    /// Share of ∫|J| dt coming from intervals where J < 0.
    pub negative_flux_fraction: f64,
}

/// Which closed-form current feeds the arrival-time integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurrentKind {
    Quantum,
    Classical,
}

impl CurrentKind {
    pub fn eval(self, params: &PacketParams, x: f64, t: f64) -> f64 {
        match self {
            CurrentKind::Quantum => j_q(params, x, t),
            CurrentKind::Classical => j_c(params, x, t),
        }
    }
}

/// Upper limit T of the arrival-time integrals.
///
/// For the three-sigma policy the fixed point is found by plain iteration
/// from X/u. When spreading grows faster than transport the iteration has no
/// fixed point to approach and this reports [`Error::CutoffNonConvergence`].
pub fn cutoff_time(params: &PacketParams, det: &DetectorConfig) -> Result<f64> {
    match det.cutoff {
        CutoffPolicy::Fixed(t) => Ok(t),
        CutoffPolicy::ThreeSigma => {
            det.check_against(params)?;
            let mut t = det.x / params.u;
            for _ in 0..det.max_cutoff_iters {
                let next = (det.x + 3.0 * spread(params, t).width) / params.u;
                if !next.is_finite() {
                    return Err(Error::CutoffNonConvergence { iters: det.max_cutoff_iters, last: next });
                }
                if (next - t).abs() < CUTOFF_REL_TOL * next.abs() {
                    if next <= 0.0 {
                        return Err(Error::validation("X", format!("cutoff {next:e} s is not positive; detector lies behind the packet")));
                    }
                    return Ok(next);
                }
                t = next;
            }
            Err(Error::CutoffNonConvergence { iters: det.max_cutoff_iters, last: t })
        }
    }
}

/// |T − (X + 3σ(T))/u|, the defect of a candidate cutoff.
pub fn cutoff_residual(params: &PacketParams, x: f64, t: f64) -> f64 {
    (t - (x + 3.0 * spread(params, t).width) / params.u).abs()
}

/// Breakpoints for time integrals at the detector: the classical passage
/// time X/u and a ladder of transit widths around it.
pub fn time_breaks(params: &PacketParams, x: f64, t_cutoff: f64) -> Vec<f64> {
    let mut interior = Vec::new();
    if params.u != 0.0 {
        let passage = x / params.u;
        if passage > 0.0 {
            let width = spread(params, passage).width.max(classical_width(params, passage));
            let dt = width / params.u.abs();
            interior.push(passage);
            for k in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
                interior.push(passage - k * dt);
                interior.push(passage + k * dt);
            }
        }
    }
    clip_breaks(0.0, t_cutoff, interior)
}

fn quad_options(det: &DetectorConfig) -> QuadOptions {
    QuadOptions::with_tolerance(det.quad_rel_tol, det.quad_abs_tol).max_depth(40)
}

fn assemble(det: &DetectorConfig, t_cutoff: f64, numerator: f64, denominator: f64, negative: f64) -> Result<ArrivalResult> {
    if !(denominator > det.quad_abs_tol) {
        return Err(Error::DenominatorVanishes { x: det.x, denominator, tol: det.quad_abs_tol });
    }
    Ok(ArrivalResult {
        tau_bar: numerator / denominator,
        t_cutoff,
        numerator,
        denominator,
        negative_flux_fraction: (negative / denominator).clamp(0.0, 1.0),
    })
}

/// τ̄ = ∫|J(X,t)| t dt / ∫|J(X,t)| dt over [0, T], by adaptive quadrature.
pub fn mean_arrival_time<F>(current: F, params: &PacketParams, det: &DetectorConfig) -> Result<ArrivalResult>
where
    F: Fn(f64, f64) -> f64,
{
    let t_cutoff = cutoff_time(params, det)?;
    let edges = time_breaks(params, det.x, t_cutoff);
    let opts = quad_options(det);
    let x = det.x;
    let denominator = integrate_breaks(|t| current(x, t).abs(), &edges, &opts)?.value;
    let numerator = integrate_breaks(|t| current(x, t).abs() * t, &edges, &opts)?.value;
    let negative = integrate_breaks(|t| (-current(x, t)).max(0.0), &edges, &opts)?.value;
    assemble(det, t_cutoff, numerator, denominator, negative)
}

/// Same functional as [`mean_arrival_time`] on a fixed composite
/// Gauss–Legendre grid with `panels` panels per breakpoint segment.
pub fn mean_arrival_time_fixed_grid<F>(current: F, params: &PacketParams, det: &DetectorConfig, panels: usize) -> Result<ArrivalResult>
where
    F: Fn(f64, f64) -> f64,
{
    const ORDER: usize = 10;
    let t_cutoff = cutoff_time(params, det)?;
    let edges = time_breaks(params, det.x, t_cutoff);
    let x = det.x;
    let denominator = fixed_grid(|t| current(x, t).abs(), &edges, panels, ORDER);
    let numerator = fixed_grid(|t| current(x, t).abs() * t, &edges, panels, ORDER);
    let negative = fixed_grid(|t| (-current(x, t)).max(0.0), &edges, panels, ORDER);
    assemble(det, t_cutoff, numerator, denominator, negative)
}

/// [`mean_arrival_time`] fed with one of the closed-form currents.
pub fn arrival_for(kind: CurrentKind, params: &PacketParams, det: &DetectorConfig) -> Result<ArrivalResult> {
    mean_arrival_time(|x, t| kind.eval(params, x, t), params, det)
}
