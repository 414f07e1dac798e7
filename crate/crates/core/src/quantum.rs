//! Closed-form quantum observables of the freely evolving Gaussian packet.

use num_complex::Complex64;

use crate::units::PacketParams;

/// Value of the wave function at a point, cm^(-1/2).
pub type ComplexAmplitude = Complex64;

/// Below this exponent `exp` leaves the normal range; such tail values are
/// returned as exact zeros.
pub(crate) const MIN_EXPONENT: f64 = -708.0;

pub(crate) fn tail_exp(exponent: f64) -> f64 {
    if exponent < MIN_EXPONENT {
        0.0
    } else {
        exponent.exp()
    }
}

/// Spreading state of the packet at time t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadState {
    /// s = C + ħt/(2mσ₀²).
    pub s: f64,
    /// Position standard deviation σ₀·√(1+s²), cm.
    pub width: f64,
}

pub fn spread(params: &PacketParams, t: f64) -> SpreadState {
    let s = params.c + params.spreading_rate() * t;
    SpreadState { s, width: params.sigma0 * s.hypot(1.0) }
}

/// Time-evolved wave function Ψ(x, t).
pub fn psi(params: &PacketParams, x: f64, t: f64) -> ComplexAmplitude {
    let carrier = params.wave_number() * (x - 0.5 * params.u * t);
    psi_envelope(params, x, t) * Complex64::from_polar(1.0, carrier)
}

/// Ψ(x, t) without its plane-wave carrier e^{ik(x − ut/2)}. For heavy
/// packets the carrier phase is large enough that its rounding dominates
/// any product of Ψ values; the envelope has no such phase.
pub fn psi_envelope(params: &PacketParams, x: f64, t: f64) -> ComplexAmplitude {
    let SpreadState { s, .. } = spread(params, t);
    let sig2 = params.sigma0 * params.sigma0;
    let xi = x - params.u * t;
    let denom = 4.0 * sig2 * (1.0 + s * s);
    let envelope = -xi * xi / denom;
    if envelope < MIN_EXPONENT {
        return Complex64::new(0.0, 0.0);
    }
    let phase = xi * xi * s / denom;
    let prefactor = (2.0 * std::f64::consts::PI * sig2).powf(-0.25) / Complex64::new(1.0, s).sqrt();
    prefactor * Complex64::from_polar(envelope.exp(), phase)
}

/// Position probability density ρ_Q(x, t), 1/cm.
pub fn rho_q(params: &PacketParams, x: f64, t: f64) -> f64 {
    let w = spread(params, t).width;
    let xi = x - params.u * t;
    tail_exp(-xi * xi / (2.0 * w * w)) / ((2.0 * std::f64::consts::PI).sqrt() * w)
}

/// Probability current J_Q(x, t), 1/s. Negative values are returned as is.
pub fn j_q(params: &PacketParams, x: f64, t: f64) -> f64 {
    let s = spread(params, t).s;
    let xi = x - params.u * t;
    let velocity = params.u + params.spreading_rate() * s * xi / (1.0 + s * s);
    rho_q(params, x, t) * velocity
}

/// Momentum probability density |Φ(p, 0)|², constant in time for a free particle.
pub fn momentum_density(params: &PacketParams, p: f64) -> f64 {
    let sd = params.momentum_spread();
    let q = p - params.mean_momentum();
    tail_exp(-q * q / (2.0 * sd * sd)) / ((2.0 * std::f64::consts::PI).sqrt() * sd)
}
