//! The classical ensemble matched to the initial quantum position and
//! momentum distributions, evolved by free Liouville flow.

use crate::error::{Error, Result};
use crate::quantum::tail_exp;
use crate::units::PacketParams;

/// A point (x, p) of classical phase space: x in cm, p in g·cm/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(x: f64, p: f64) -> Self {
        PhasePoint { x, p }
    }

    /// Where this initial condition sits after free flight for `t` seconds.
    pub fn evolve(self, mass: f64, t: f64) -> Self {
        PhasePoint { x: self.x + self.p * t / mass, p: self.p }
    }
}

/// Standard deviation of the initial classical position distribution, σ₀√(1+C²).
pub fn initial_position_spread(params: &PacketParams) -> f64 {
    params.sigma0 * params.c.hypot(1.0)
}

/// Initial phase-space density D₀(x₀, p₀), a product of the initial quantum
/// position and momentum densities.
pub fn d0(params: &PacketParams, pt: PhasePoint) -> f64 {
    let sx = initial_position_spread(params);
    let sp = params.momentum_spread();
    let q = pt.p - params.mean_momentum();
    let exponent = -pt.x * pt.x / (2.0 * sx * sx) - q * q / (2.0 * sp * sp);
    tail_exp(exponent) / (std::f64::consts::PI * params.hbar * params.c.hypot(1.0))
}

/// Phase-space density at time t, obtained by transporting D₀ along the
/// free characteristics x₀ = x − pt/m, p₀ = p.
pub fn d_t(params: &PacketParams, pt: PhasePoint, t: f64) -> f64 {
    d0(params, PhasePoint { x: pt.x - pt.p * t / params.mass, p: pt.p })
}

/// Standard deviation of ρ_C at time t.
pub fn classical_width(params: &PacketParams, t: f64) -> f64 {
    let b = params.spreading_rate() * t;
    params.sigma0 * (1.0 + params.c * params.c + b * b).sqrt()
}

/// Classical position density ρ_C(x, t), 1/cm.
pub fn rho_c(params: &PacketParams, x: f64, t: f64) -> f64 {
    let w = classical_width(params, t);
    let xi = x - params.u * t;
    tail_exp(-xi * xi / (2.0 * w * w)) / ((2.0 * std::f64::consts::PI).sqrt() * w)
}

fn velocity_field(params: &PacketParams, x: f64, t: f64) -> f64 {
    // ħ²t / (ħ²t² + 4m²σ₀⁴(1+C²)), divided through by 4m²σ₀⁴
    let rate = params.spreading_rate();
    let gain = rate * rate * t / (rate * rate * t * t + 1.0 + params.c * params.c);
    params.u + (x - params.u * t) * gain
}

/// Classical probability current J_C(x, t), 1/s.
pub fn j_c(params: &PacketParams, x: f64, t: f64) -> f64 {
    rho_c(params, x, t) * velocity_field(params, x, t)
}

/// Mean velocity of the ensemble at (x, t), cm/s. Undefined where ρ_C
/// underflows.
pub fn mean_velocity(params: &PacketParams, x: f64, t: f64) -> Result<f64> {
    if rho_c(params, x, t) == 0.0 {
        return Err(Error::Domain { quantity: "mean velocity", x, t });
    }
    Ok(velocity_field(params, x, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use crate::quad::{clip_breaks, integrate, integrate_2d, integrate_breaks, QuadOptions};
    use crate::quantum::{j_q, rho_q, spread};
    use crate::units::make_params;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn fig1(mass: f64) -> PacketParams {
        make_params(1e-5, 1e3, 10.0, mass).unwrap()
    }

    /// Breakpoints for p-integrals of D(x, p, t) at fixed x: the momentum
    /// peak and the characteristic ridge p = m x / t.
    fn p_edges(params: &PacketParams, x: f64, t: f64) -> Vec<f64> {
        let pb = params.mean_momentum();
        let sp = params.momentum_spread();
        let mut interior: Vec<f64> = (-4..=4).map(|k| pb + k as f64 * sp).collect();
        if t > 0.0 {
            let ridge = params.mass * x / t;
            let narrow = initial_position_spread(params) * params.mass / t;
            interior.extend((-8..=8).map(|k| ridge + k as f64 * narrow));
        }
        clip_breaks(pb - 10.0 * sp, pb + 10.0 * sp, interior)
    }

    fn numeric_rho_c(params: &PacketParams, x: f64, t: f64) -> f64 {
        let opts = QuadOptions::with_tolerance(1e-12, 0.0);
        integrate_breaks(|p| d_t(params, PhasePoint::new(x, p), t), &p_edges(params, x, t), &opts).unwrap().value
    }

    fn numeric_j_c(params: &PacketParams, x: f64, t: f64) -> f64 {
        let opts = QuadOptions::with_tolerance(1e-12, 0.0);
        let r = integrate_breaks(|p| p * d_t(params, PhasePoint::new(x, p), t), &p_edges(params, x, t), &opts).unwrap();
        r.value / params.mass
    }

    #[test]
    fn d0_peak_values() {
        let p = fig1(1.0);
        let peak = d0(&p, PhasePoint::new(0.0, p.mean_momentum()));
        assert!(rel(peak, 1.0 / (PI * p.hbar * 101f64.sqrt())) < 1e-14);
        let p0 = make_params(1e-5, 1e3, 0.0, 1.0).unwrap();
        assert!(rel(d0(&p0, PhasePoint::new(0.0, p0.mean_momentum())), 1.0 / (PI * p0.hbar)) < 1e-14);
    }

    #[test]
    fn d0_normalizes() {
        let p = fig1(1.0);
        let sx = initial_position_spread(&p);
        let sp = p.momentum_spread();
        let pb = p.mean_momentum();
        let r = integrate_2d(
            |x, q| d0(&p, PhasePoint::new(x, q)),
            &[-8.0 * sx, 8.0 * sx],
            |_| vec![pb - 8.0 * sp, pb + 8.0 * sp],
            &QuadOptions::with_tolerance(1e-12, 0.0),
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn evolution_identity_and_transport() {
        let p = fig1(2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let pt = PhasePoint::new(rng.random_range(-3e-4..3e-4), p.mean_momentum() + rng.random_range(-3.0..3.0) * p.momentum_spread());
            assert_eq!(d_t(&p, pt, 0.0), d0(&p, pt));
            let t = 1e-5;
            let on_line = PhasePoint::new(pt.p * t / p.mass, pt.p);
            assert!(rel(d_t(&p, on_line, t), d0(&p, PhasePoint::new(0.0, pt.p))) < 1e-9);
        }
    }

    #[test]
    fn liouville_residual_second_order() {
        let p = fig1(1.0);
        let t = 1e-5;
        let sx = initial_position_spread(&p);
        let pt = PhasePoint::new(p.u * t + 0.4 * sx, p.mean_momentum() + 0.3 * p.momentum_spread());
        let transit = sx / p.u;
        let orders = fd::measured_orders(|k| {
            fd::liouville_residual(|x, q, t| d_t(&p, PhasePoint::new(x, q), t), p.mass, pt.x, pt.p, t, sx * 1e-3 * k, transit * 1e-3 * k).abs()
        });
        assert!(orders.iter().all(|&o| o >= 1.9), "{orders:?}");
    }

    #[test]
    fn rho_c_initial_peak() {
        let p = fig1(1.0);
        assert!(rel(rho_c(&p, 0.0, 0.0), 1.0 / (2.0 * PI * 1e-10 * 101.0).sqrt()) < 1e-14);
    }

    #[test]
    fn rho_c_is_p_marginal_of_d() {
        for mass in [1.0, 100.0] {
            let p = fig1(mass);
            for t in [0.0, 1e-6, 1e-5] {
                let w = classical_width(&p, t);
                for k in [-2.0, -0.5, 0.0, 1.0, 2.5] {
                    let x = p.u * t + k * w;
                    let n = numeric_rho_c(&p, x, t);
                    assert!(rel(n, rho_c(&p, x, t)) < 1e-9, "m={mass} t={t} k={k}: {n} vs {}", rho_c(&p, x, t));
                }
            }
        }
    }

    #[test]
    fn j_c_matches_first_momentum_moment() {
        let p = fig1(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let t = rng.random_range(1e-7..2e-5);
            let w = classical_width(&p, t);
            let x = p.u * t + rng.random_range(-2.5..2.5) * w;
            let n = numeric_j_c(&p, x, t);
            assert!(rel(n, j_c(&p, x, t)) < 1e-8, "{n} vs {}", j_c(&p, x, t));
        }
    }

    #[test]
    fn current_at_center_is_rho_u() {
        let p = fig1(7.0);
        for t in [0.0, 1e-6, 1e-4] {
            let c = p.u * t;
            assert!(rel(j_c(&p, c, t), rho_c(&p, c, t) * p.u) < 1e-15);
        }
    }

    #[test]
    fn minimum_uncertainty_matches_quantum() {
        let p = make_params(1e-5, 1e3, 0.0, 1.0).unwrap();
        for t in [0.0, 1e-6, 1e-5, 1e-4] {
            let w = spread(&p, t).width;
            for k in -40..=40 {
                let x = p.u * t + k as f64 * 0.15 * w;
                assert!(rel(rho_c(&p, x, t), rho_q(&p, x, t)) < 1e-12);
                assert!(rel(j_c(&p, x, t), j_q(&p, x, t)) < 1e-12);
            }
        }
    }

    #[test]
    fn fig1_density_gap_shrinks_from_5_amu() {
        // Sup-norm gap along the part of the ladder past the width-ratio turnover.
        let t = 1e-5;
        let gaps: Vec<f64> = [5.0, 20.0, 100.0, 1000.0]
            .iter()
            .map(|&m| {
                let p = fig1(m);
                let w = spread(&p, t).width.max(classical_width(&p, t));
                (0..201)
                    .map(|i| {
                        let x = p.u * t + (i as f64 / 100.0 - 1.0) * 6.0 * w;
                        (rho_q(&p, x, t) - rho_c(&p, x, t)).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(gaps.windows(2).all(|g| g[1] < g[0]), "{gaps:?}");
    }

    #[test]
    fn classical_continuity_second_order() {
        let p = fig1(1.0);
        let t = 1e-5;
        let w = classical_width(&p, t);
        let x = p.u * t - 0.8 * w;
        let orders = fd::measured_orders(|k| {
            fd::continuity_residual(|x, t| rho_c(&p, x, t), |x, t| j_c(&p, x, t), x, t, w * 1e-4 * k, t * 1e-4 * k).abs()
        });
        assert!(orders.iter().all(|&o| o >= 1.9), "{orders:?}");
    }

    #[test]
    fn mean_velocity_cases() {
        let p = fig1(1.0);
        let t = 1e-5;
        assert_eq!(mean_velocity(&p, p.u * t, t).unwrap(), p.u);
        for x in [-1e-4, 0.0, 2e-5] {
            assert_eq!(mean_velocity(&p, x, 0.0).unwrap(), p.u);
        }
        // three samples on a line
        let w = classical_width(&p, t);
        let xs = [p.u * t - w, p.u * t + 0.2 * w, p.u * t + 2.0 * w];
        let v: Vec<f64> = xs.iter().map(|&x| mean_velocity(&p, x, t).unwrap()).collect();
        let slope = (v[2] - v[0]) / (xs[2] - xs[0]);
        let predicted = v[0] + slope * (xs[1] - xs[0]);
        assert!(((v[1] - predicted) / v[1]).abs() < 1e-12);
        assert!(matches!(mean_velocity(&p, 10.0, t), Err(Error::Domain { .. })));
    }

    #[test]
    fn rho_c_normalizes() {
        let p = fig1(1.0);
        for t in [0.0, 1e-5, 1e-3] {
            let w = classical_width(&p, t);
            let c = p.u * t;
            let r = integrate(|x| rho_c(&p, x, t), c - 10.0 * w, c + 10.0 * w, &QuadOptions::with_tolerance(1e-12, 0.0)).unwrap();
            assert!((r.value - 1.0).abs() < 1e-9);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn phase_density_nonnegative(c in -100.0f64..100.0, m in 0.1f64..1e5, t in 0.0f64..1e-2,
                                         kx in -50.0f64..50.0, kp in -50.0f64..50.0) {
                let p = make_params(1e-5, 1e3, c, m).unwrap();
                let pt = PhasePoint::new(p.u * t + kx * classical_width(&p, t), p.mean_momentum() + kp * p.momentum_spread());
                let v = d_t(&p, pt, t);
                prop_assert!(v >= 0.0 && v.is_finite());
            }
        }
    }
}
