//! Wigner quasi-distribution of the evolved packet.
//!
//! [`wigner_closed`] is the production path. [`wigner_quad`] evaluates the
//! defining overlap integral directly from the wave function and exists to
//! check it.

use num_complex::Complex64;

use crate::error::Result;
use crate::quad::{clip_breaks, integrate, integrate_breaks, QuadOptions};
use crate::quantum::{psi_envelope, spread, tail_exp};
use crate::units::PacketParams;

/// Closed-form Wigner function D_W(x, p, t).
pub fn wigner_closed(params: &PacketParams, x: f64, p: f64, t: f64) -> f64 {
    let q = p - params.mean_momentum();
    let sig2 = params.sigma0 * params.sigma0;
    let hbar = params.hbar;
    let shift = x - p * t / params.mass - 2.0 * params.c * q * sig2 / hbar;
    let exponent = -2.0 * q * q * sig2 / (hbar * hbar) - shift * shift / (2.0 * sig2);
    tail_exp(exponent) / (std::f64::consts::PI * hbar)
}

/// Result of the direct overlap integral, before discarding the imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerQuadrature {
    pub re: f64,
    /// Should vanish; its size relative to `re` is a self-check.
    pub im: f64,
}

impl WignerQuadrature {
    pub fn imaginary_residue(&self) -> f64 {
        if self.re == 0.0 {
            self.im.abs()
        } else {
            (self.im / self.re).abs()
        }
    }
}

/// Maximum bisection depth for the oscillatory overlap integral.
pub const OVERLAP_MAX_DEPTH: u32 = 20;

/// D_W(x, p, t) from (1/πħ)∫Ψ*(x+y,t)Ψ(x−y,t)e^{2ipy/ħ}dy over y ∈ ±8 widths.
///
/// The carriers of the two Ψ factors combine to e^{−2iky} exactly, so the
/// integrand is formed from [`psi_envelope`] with phase 2(p − ħk)y/ħ.
pub fn wigner_quad_parts(params: &PacketParams, x: f64, p: f64, t: f64) -> Result<WignerQuadrature> {
    let half = 8.0 * spread(params, t).width;
    let q = p - params.hbar * params.wave_number();
    let integrand = |y: f64| -> Complex64 {
        let phase = Complex64::from_polar(1.0, 2.0 * q * y / params.hbar);
        psi_envelope(params, x + y, t).conj() * psi_envelope(params, x - y, t) * phase
    };
    let opts = QuadOptions::with_tolerance(1e-11, 0.0).max_depth(OVERLAP_MAX_DEPTH);
    let re = integrate(|y| integrand(y).re, -half, half, &opts)?.value;
    let im_opts = QuadOptions { abs_tol: 1e-12 * re.abs(), ..opts };
    let im = integrate(|y| integrand(y).im, -half, half, &im_opts)?.value;
    let norm = std::f64::consts::PI * params.hbar;
    Ok(WignerQuadrature { re: re / norm, im: im / norm })
}

/// Real part of [`wigner_quad_parts`].
pub fn wigner_quad(params: &PacketParams, x: f64, p: f64, t: f64) -> Result<f64> {
    wigner_quad_parts(params, x, p, t).map(|w| w.re)
}

/// Rectangular phase-space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

impl PhaseGrid {
    /// Grid spanning ±`k` standard deviations of the position and momentum
    /// marginals at time t.
    pub fn covering(params: &PacketParams, t: f64, k: f64, nx: usize, np: usize) -> Self {
        let cx = params.u * t;
        let wx = k * spread(params, t).width;
        let cp = params.mean_momentum();
        let wp = k * params.momentum_spread();
        PhaseGrid { x: linspace(cx - wx, cx + wx, nx), p: linspace(cp - wp, cp + wp, np) }
    }

    fn x_range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn p_range(&self) -> (f64, f64) {
        (self.p[0], self.p[self.p.len() - 1])
    }
}

/// Position and momentum marginals of the closed-form Wigner function.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub x: Vec<f64>,
    /// ∫D_W dp at each x, 1/cm.
    pub x_profile: Vec<f64>,
    pub p: Vec<f64>,
    /// ∫D_W dx at each p, 1/(g·cm/s).
    pub p_profile: Vec<f64>,
}

/// Integrates [`wigner_closed`] over the grid's momentum range at every grid
/// x, and over its position range at every grid p.
pub fn wigner_marginals(params: &PacketParams, t: f64, grid: &PhaseGrid, opts: &QuadOptions) -> Result<Marginals> {
    let (x_lo, x_hi) = grid.x_range();
    let (p_lo, p_hi) = grid.p_range();
    let pb = params.mean_momentum();
    let sig = params.sigma0;
    // At fixed x the second Gaussian factor is centred on q* = (x − p̄t/m)/β
    // with width σ₀/|β|.
    let beta = t / params.mass + 2.0 * params.c * sig * sig / params.hbar;

    let mut x_profile = Vec::with_capacity(grid.x.len());
    for &x in &grid.x {
        let mut interior: Vec<f64> = (-4..=4).map(|k| pb + k as f64 * params.momentum_spread()).collect();
        if beta != 0.0 {
            let centre = pb + (x - pb * t / params.mass) / beta;
            let narrow = sig / beta.abs();
            interior.extend((-8..=8).map(|k| centre + k as f64 * narrow));
        }
        let edges = clip_breaks(p_lo, p_hi, interior);
        x_profile.push(integrate_breaks(|p| wigner_closed(params, x, p, t), &edges, opts)?.value);
    }

    let mut p_profile = Vec::with_capacity(grid.p.len());
    for &p in &grid.p {
        let q = p - pb;
        let centre = p * t / params.mass + 2.0 * params.c * q * sig * sig / params.hbar;
        let edges = clip_breaks(x_lo, x_hi, (-8..=8).map(|k| centre + k as f64 * sig));
        p_profile.push(integrate_breaks(|x| wigner_closed(params, x, p, t), &edges, opts)?.value);
    }

    Ok(Marginals { x: grid.x.clone(), x_profile, p: grid.p.clone(), p_profile })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{d_t, PhasePoint};
    use crate::quantum::{momentum_density, rho_q};
    use crate::units::make_params;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn fig1(c: f64) -> PacketParams {
        make_params(1e-5, 1e3, c, 1.0).unwrap()
    }

    /// Random points within two standard deviations of the Wigner ridge.
    fn ridge_points(params: &PacketParams, t: f64, n: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let q = rng.random_range(-2.0..2.0) * params.momentum_spread();
                let p = params.mean_momentum() + q;
                let x = p * t / params.mass
                    + 2.0 * params.c * q * params.sigma0 * params.sigma0 / params.hbar
                    + rng.random_range(-2.0..2.0) * params.sigma0;
                (x, p)
            })
            .collect()
    }

    #[test]
    fn closed_form_peak() {
        let p = fig1(10.0);
        let t = 1e-5;
        assert!(rel(wigner_closed(&p, p.u * t, p.mean_momentum(), t), 1.0 / (PI * p.hbar)) < 1e-14);
    }

    #[test]
    fn minimum_uncertainty_equals_classical_density() {
        let p = fig1(0.0);
        for (x, q) in ridge_points(&p, 1e-5, 50, 5) {
            let w = wigner_closed(&p, x, q, 1e-5);
            let d = d_t(&p, PhasePoint::new(x, q), 1e-5);
            assert!(rel(w, d) < 1e-12);
        }
    }

    #[test]
    fn squeezed_state_differs_from_classical_density() {
        let p = fig1(10.0);
        let t = 1e-5;
        let grid = PhaseGrid::covering(&p, t, 4.0, 41, 41);
        let gap = grid
            .x
            .iter()
            .flat_map(|&x| grid.p.iter().map(move |&q| (x, q)))
            .map(|(x, q)| (wigner_closed(&p, x, q, t) - d_t(&p, PhasePoint::new(x, q), t)).abs())
            .fold(0.0, f64::max);
        assert!(gap > 1e-3 / (PI * p.hbar));
    }

    #[test]
    fn quadrature_peak_of_minimum_uncertainty_state() {
        let p = fig1(0.0);
        let w = wigner_quad(&p, 0.0, p.mean_momentum(), 0.0).unwrap();
        assert!(rel(w, 1.0 / (PI * p.hbar)) < 1e-7);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for mass in [1.0, 1000.0] {
            let p = make_params(1e-5, 1e3, 10.0, mass).unwrap();
            quadrature_matches_at(&p, 1e-5);
        }
    }

    fn quadrature_matches_at(p: &PacketParams, t: f64) {
        for (x, q) in ridge_points(p, t, 10, 11) {
            let parts = wigner_quad_parts(p, x, q, t).unwrap();
            let closed = wigner_closed(p, x, q, t);
            assert!(rel(parts.re, closed) < 1e-7, "{} vs {closed}", parts.re);
            assert!(parts.imaginary_residue() <= 1e-10, "{}", parts.imaginary_residue());
        }
    }

    #[test]
    fn marginals_reproduce_quantum_densities() {
        let p = fig1(10.0);
        let t = 1e-5;
        let grid = PhaseGrid::covering(&p, t, 8.0, 33, 33);
        let m = wigner_marginals(&p, t, &grid, &QuadOptions::with_tolerance(1e-12, 0.0)).unwrap();
        let x_peak = m.x_profile.iter().cloned().fold(0.0, f64::max);
        for (x, v) in m.x.iter().zip(&m.x_profile) {
            let exact = rho_q(&p, *x, t);
            if exact > 1e-12 * x_peak {
                assert!(rel(*v, exact) < 1e-8, "x={x}: {v} vs {exact}");
            }
        }
        let centre = m.x_profile[16];
        assert!(rel(centre, rho_q(&p, p.u * t, t)) < 1e-8);
        let p_peak = (2.0 * p.sigma0 * p.sigma0 / (PI * p.hbar * p.hbar)).sqrt();
        assert!(rel(m.p_profile[16], p_peak) < 1e-8);
        for (q, v) in m.p.iter().zip(&m.p_profile) {
            let exact = momentum_density(&p, *q);
            if exact > 1e-12 * p_peak {
                assert!(rel(*v, exact) < 1e-8);
            }
        }
    }

    #[test]
    fn values_nonnegative_for_gaussian_family() {
        let p = fig1(-4.0);
        let grid = PhaseGrid::covering(&p, 2e-6, 10.0, 21, 21);
        for &x in &grid.x {
            for &q in &grid.p {
                let v = wigner_closed(&p, x, q, 2e-6);
                assert!(v >= 0.0 && v.is_finite());
            }
        }
    }
}
