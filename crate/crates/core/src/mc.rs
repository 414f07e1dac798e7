//! Monte Carlo oracle: sample the initial classical ensemble, fly each
//! particle freely, and estimate densities and detector fluxes from the
//! trajectories.
//!
//! Sampling is split into fixed-size chunks, each drawn from its own ChaCha
//! stream keyed by the chunk index, so a seed gives the same ensemble no
//! matter how many threads run. All aggregation is integer counting.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::classical::{initial_position_spread, PhasePoint};
use crate::error::{Error, Result};
use crate::units::PacketParams;

const CHUNK: usize = 1 << 14;

/// Initial conditions drawn from D₀.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSample {
    pub points: Vec<PhasePoint>,
    pub seed: u64,
    pub count: usize,
}

/// Draws `count` phase points from D₀: x₀ ~ N(0, σ₀√(1+C²)) and, independently,
/// p₀ ~ N(p̄, ħ/(2σ₀)).
pub fn sample_d0(params: &PacketParams, count: usize, seed: u64) -> Result<EnsembleSample> {
    if count < 1 {
        return Err(Error::validation("count", "sample size must be >= 1"));
    }
    let xdist = Normal::new(0.0, initial_position_spread(params)).map_err(|e| Error::validation("sigma0", e.to_string()))?;
    let pdist = Normal::new(params.mean_momentum(), params.momentum_spread()).map_err(|e| Error::validation("sigma0", e.to_string()))?;
    let mut points = vec![PhasePoint::new(0.0, 0.0); count];
    points.par_chunks_mut(CHUNK).enumerate().for_each(|(i, chunk)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for pt in chunk {
            pt.x = xdist.sample(&mut rng);
            pt.p = pdist.sample(&mut rng);
        }
    });
    Ok(EnsembleSample { points, seed, count })
}

fn bin_index(edges: &[f64], v: f64) -> Option<usize> {
    if !(v >= edges[0] && v < edges[edges.len() - 1]) {
        return None;
    }
    Some(edges.partition_point(|&e| e <= v) - 1)
}

fn check_edges(edges: &[f64], field: &'static str) -> Result<()> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation(field, "bin edges must be at least two strictly increasing values"));
    }
    Ok(())
}

/// Evenly spaced bin edges.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
}

/// Position histogram normalised by the full sample size, so each bin holds
/// a density estimate in 1/cm.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    /// Binomial standard error of each density value.
    pub std_error: Vec<f64>,
    pub total: usize,
}

impl DensityHistogram {
    pub fn centres(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    /// ∑ density · width, the fraction of the sample inside the bins.
    pub fn integral(&self) -> f64 {
        self.density.iter().zip(self.edges.windows(2)).map(|(d, w)| d * (w[1] - w[0])).sum()
    }
}

/// Histogram of positions x₀ + p₀t/m at time t.
pub fn mc_rho_c(sample: &EnsembleSample, params: &PacketParams, edges: &[f64], t: f64) -> Result<DensityHistogram> {
    check_edges(edges, "x_bins")?;
    let bins = edges.len() - 1;
    let counts = sample
        .points
        .par_iter()
        .fold(
            || vec![0u64; bins],
            |mut acc, pt| {
                if let Some(i) = bin_index(edges, pt.evolve(params.mass, t).x) {
                    acc[i] += 1;
                }
                acc
            },
        )
        .reduce(|| vec![0u64; bins], add_counts);
    let n = sample.count as f64;
    let mut density = Vec::with_capacity(bins);
    let mut std_error = Vec::with_capacity(bins);
    for (c, w) in counts.iter().zip(edges.windows(2)) {
        let width = w[1] - w[0];
        let frac = *c as f64 / n;
        density.push(frac / width);
        std_error.push((frac * (1.0 - frac) / n).sqrt() / width);
    }
    Ok(DensityHistogram { edges: edges.to_vec(), counts, density, std_error, total: sample.count })
}

fn add_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    a
}

/// Time and direction of the single crossing of x = `x_det` by a free
/// particle, if it ever happens at t ≥ 0. Direction is +1 for p₀ > 0.
pub fn crossing_time(pt: PhasePoint, mass: f64, x_det: f64) -> Option<(f64, i8)> {
    if pt.p == 0.0 {
        return None;
    }
    let t = (x_det - pt.x) * mass / pt.p;
    if t >= 0.0 && t.is_finite() {
        Some((t, if pt.p > 0.0 { 1 } else { -1 }))
    } else {
        None
    }
}

/// Net flux through the detector in one time bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxEstimate {
    /// Signed crossings per particle per unit time, 1/s.
    pub value: f64,
    pub std_error: f64,
    pub n_crossings: u64,
}

/// Binned estimate of J_C(X, t) from signed crossings.
pub fn mc_flux(sample: &EnsembleSample, params: &PacketParams, x_det: f64, t_edges: &[f64]) -> Result<Vec<FluxEstimate>> {
    check_edges(t_edges, "t_bins")?;
    let bins = t_edges.len() - 1;
    // [forward, backward] per bin
    let counts = sample
        .points
        .par_iter()
        .fold(
            || vec![[0u64; 2]; bins],
            |mut acc, pt| {
                if let Some((t, dir)) = crossing_time(*pt, params.mass, x_det) {
                    if let Some(i) = bin_index(t_edges, t) {
                        acc[i][usize::from(dir < 0)] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![[0u64; 2]; bins],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| {
                    x[0] += y[0];
                    x[1] += y[1];
                });
                a
            },
        );
    let n = sample.count as f64;
    Ok(counts
        .iter()
        .zip(t_edges.windows(2))
        .map(|(&[fwd, bwd], w)| {
            let width = w[1] - w[0];
            let crossings = fwd + bwd;
            let mean = (fwd as f64 - bwd as f64) / n;
            let std_error = if crossings == 0 {
                // one-event binomial bound
                1.0 / (n * width)
            } else {
                let second = crossings as f64 / n;
                ((second - mean * mean).max(0.0) / n).sqrt() / width
            };
            FluxEstimate { value: mean / width, std_error, n_crossings: crossings }
        })
        .collect())
}

/// Sample mean of the crossing times in [0, t_cutoff] with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_crossings: usize,
}

/// Trajectory estimate of the mean arrival time: every crossing before the
/// cutoff counts once, which is |J|-weighting when the flux does not change
/// sign.
pub fn mc_mean_arrival(sample: &EnsembleSample, params: &PacketParams, x_det: f64, t_cutoff: f64) -> Result<ArrivalEstimate> {
    let times: Vec<f64> = sample
        .points
        .iter()
        .filter_map(|pt| crossing_time(*pt, params.mass, x_det))
        .map(|(t, _)| t)
        .filter(|&t| t <= t_cutoff)
        .collect();
    let n = times.len();
    if n < 2 {
        return Err(Error::DenominatorVanishes { x: x_det, denominator: n as f64, tol: 2.0 });
    }
    let mean = times.iter().sum::<f64>() / n as f64;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    Ok(ArrivalEstimate { mean, std_error: (var / n as f64).sqrt(), n_crossings: n })
}

/// Layout of a trajectory-versus-closed-form comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckLayout {
    /// Number of flux bins spanning ±`flux_span` transit widths around X/u.
    pub flux_bins: usize,
    pub flux_span: f64,
    /// Time of the position histogram, s.
    pub density_time: f64,
    /// Number of position bins spanning ±6 classical widths around ut.
    pub density_bins: usize,
}

impl CheckLayout {
    pub fn for_detector(params: &PacketParams, x_det: f64) -> Self {
        CheckLayout { flux_bins: 100, flux_span: 5.0, density_time: (x_det / params.u).max(0.0), density_bins: 120 }
    }
}

/// Monte Carlo estimates next to the closed forms they should reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub flux_edges: Vec<f64>,
    pub flux: Vec<FluxEstimate>,
    /// J_C(X, t) at each bin midpoint.
    pub flux_exact: Vec<f64>,
    /// Bins with at least 100 crossings.
    pub flux_tested: usize,
    /// Tested bins within 3 standard errors of the closed form.
    pub flux_within: usize,
    pub density: DensityHistogram,
    /// ρ_C at each bin midpoint.
    pub density_exact: Vec<f64>,
    /// Bins within 4 standard errors of the closed form.
    pub density_within: usize,
    pub arrival: ArrivalEstimate,
    pub arrival_exact: crate::arrival::ArrivalResult,
}

impl CheckReport {
    pub fn flux_pass_fraction(&self) -> f64 {
        self.flux_within as f64 / self.flux_tested.max(1) as f64
    }

    /// |MC mean − τ̄_C| in units of the MC standard error.
    pub fn arrival_z(&self) -> f64 {
        (self.arrival.mean - self.arrival_exact.tau_bar).abs() / self.arrival.std_error
    }
}

/// Compares a sample's trajectories against J_C, ρ_C and τ̄_C.
pub fn check_against_closed_forms(
    sample: &EnsembleSample,
    params: &PacketParams,
    det: &crate::units::DetectorConfig,
    layout: &CheckLayout,
) -> Result<CheckReport> {
    use crate::arrival::{arrival_for, CurrentKind};
    use crate::classical::{classical_width, j_c, rho_c};

    if !(params.u > 0.0 && det.x / params.u > 0.0) {
        return Err(Error::validation("X", "flux check needs a detector ahead of a forward-moving packet"));
    }
    let passage = det.x / params.u;
    let dt = classical_width(params, passage) / params.u;
    let flux_edges = uniform_edges((passage - layout.flux_span * dt).max(0.0), passage + layout.flux_span * dt, layout.flux_bins);
    let flux = mc_flux(sample, params, det.x, &flux_edges)?;
    let flux_exact: Vec<f64> = flux_edges.windows(2).map(|w| j_c(params, det.x, 0.5 * (w[0] + w[1]))).collect();
    let tested: Vec<bool> = flux.iter().map(|f| f.n_crossings >= 100).collect();
    let flux_tested = tested.iter().filter(|&&t| t).count();
    let flux_within = flux
        .iter()
        .zip(&flux_exact)
        .zip(&tested)
        .filter(|((f, exact), t)| **t && (f.value - **exact).abs() <= 3.0 * f.std_error)
        .count();

    let t = layout.density_time;
    let w = classical_width(params, t);
    let centre = params.u * t;
    let density_edges = uniform_edges(centre - 6.0 * w, centre + 6.0 * w, layout.density_bins);
    let density = mc_rho_c(sample, params, &density_edges, t)?;
    let density_exact: Vec<f64> = density.centres().map(|x| rho_c(params, x, t)).collect();
    let density_within = density
        .density
        .iter()
        .zip(&density_exact)
        .zip(&density.std_error)
        .filter(|((d, e), se)| (**d - **e).abs() <= 4.0 * se.max(1.0 / (sample.count as f64 * (density_edges[1] - density_edges[0]))))
        .count();

    let arrival_exact = arrival_for(CurrentKind::Classical, params, det)?;
    let arrival = mc_mean_arrival(sample, params, det.x, arrival_exact.t_cutoff)?;
    Ok(CheckReport {
        flux_edges,
        flux,
        flux_exact,
        flux_tested,
        flux_within,
        density,
        density_exact,
        density_within,
        arrival,
        arrival_exact,
    })
}
