//! Physical constants, unit conventions and the validated parameter sets.
//!
//! Everything internal is CGS: lengths in cm, masses in g, times in s,
//! actions in erg·s. Atomic mass units are converted to grams exactly once,
//! in [`make_params`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant (CODATA 2018), erg·s.
pub const HBAR_CGS: f64 = 1.054571817e-27;

/// One unified atomic mass unit in grams (CODATA 2018).
pub const AMU_IN_GRAMS: f64 = 1.66053906660e-24;

/// Parameters of the Gaussian ensemble shared by the quantum and classical
/// descriptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketParams {
    /// Initial width parameter, cm.
    pub sigma0: f64,
    /// Group velocity, cm/s.
    pub u: f64,
    /// Squeezing / correlation parameter. Zero is the minimum-uncertainty state.
    pub c: f64,
    /// Particle mass, g.
    pub mass: f64,
    /// Reduced Planck constant, erg·s.
    pub hbar: f64,
}

impl PacketParams {
    /// Builds a parameter set directly in CGS units with an explicit ħ.
    pub fn new(sigma0: f64, u: f64, c: f64, mass: f64, hbar: f64) -> Result<Self> {
        if !(sigma0.is_finite() && sigma0 > 0.0) {
            return Err(Error::validation("sigma0", format!("must be finite and > 0, got {sigma0}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::validation("mass", format!("must be finite and > 0, got {mass}")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::validation("hbar", format!("must be finite and > 0, got {hbar}")));
        }
        if !u.is_finite() {
            return Err(Error::validation("u", format!("must be finite, got {u}")));
        }
        if !c.is_finite() {
            return Err(Error::validation("C", format!("must be finite, got {c}")));
        }
        let params = PacketParams { sigma0, u, c, mass, hbar };
        if !params.wave_number().is_finite() {
            return Err(Error::validation("u", "mean wave number m·u/ħ overflows"));
        }
        Ok(params)
    }

    /// Mean momentum p̄ = m·u, g·cm/s.
    pub fn mean_momentum(&self) -> f64 {
        self.mass * self.u
    }

    /// Mean wave number k = p̄/ħ, 1/cm.
    pub fn wave_number(&self) -> f64 {
        self.mean_momentum() / self.hbar
    }

    /// Mass in atomic mass units.
    pub fn mass_amu(&self) -> f64 {
        self.mass / AMU_IN_GRAMS
    }

    /// Standard deviation of the momentum distribution, ħ/(2σ₀).
    pub fn momentum_spread(&self) -> f64 {
        self.hbar / (2.0 * self.sigma0)
    }

    /// Rate at which the dimensionless spread parameter grows, ħ/(2mσ₀²), 1/s.
    pub fn spreading_rate(&self) -> f64 {
        self.hbar / (2.0 * self.mass * self.sigma0 * self.sigma0)
    }

    pub fn with_mass_amu(&self, mass_amu: f64) -> Result<Self> {
        PacketParams::new(self.sigma0, self.u, self.c, mass_amu * AMU_IN_GRAMS, self.hbar)
    }

    pub fn with_c(&self, c: f64) -> Result<Self> {
        PacketParams::new(self.sigma0, self.u, c, self.mass, self.hbar)
    }
}

/// Validates figure-style inputs and converts the mass from amu to grams.
/// ħ is set to its CODATA value.
pub fn make_params(sigma0_cm: f64, u_cm_per_s: f64, c: f64, mass_amu: f64) -> Result<PacketParams> {
    if !(mass_amu.is_finite() && mass_amu > 0.0) {
        return Err(Error::validation("mass", format!("must be finite and > 0 amu, got {mass_amu}")));
    }
    PacketParams::new(sigma0_cm, u_cm_per_s, c, mass_amu * AMU_IN_GRAMS, HBAR_CGS)
}

/// Initial position-momentum uncertainty product, (ħ/2)·√(1+C²).
pub fn uncertainty_product(params: &PacketParams) -> f64 {
    0.5 * params.hbar * params.c.hypot(1.0)
}

/// How the upper limit of the arrival-time integrals is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffPolicy {
    /// Self-consistent T = (X + 3σ(T))/u.
    ThreeSigma,
    /// A caller-supplied cutoff in seconds.
    Fixed(f64),
}

/// Detector location and time-integration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Detector position, cm.
    pub x: f64,
    pub cutoff: CutoffPolicy,
    pub quad_rel_tol: f64,
    pub quad_abs_tol: f64,
    pub max_cutoff_iters: usize,
}

impl DetectorConfig {
    pub const DEFAULT_REL_TOL: f64 = 1e-9;
    pub const DEFAULT_ABS_TOL: f64 = 1e-30;
    pub const DEFAULT_MAX_CUTOFF_ITERS: usize = 10_000;

    /// Detector at `x` with the three-sigma cutoff and default tolerances.
    pub fn at(x: f64) -> Result<Self> {
        DetectorConfig::new(
            x,
            CutoffPolicy::ThreeSigma,
            Self::DEFAULT_REL_TOL,
            Self::DEFAULT_ABS_TOL,
            Self::DEFAULT_MAX_CUTOFF_ITERS,
        )
    }

    pub fn new(
        x: f64,
        cutoff: CutoffPolicy,
        quad_rel_tol: f64,
        quad_abs_tol: f64,
        max_cutoff_iters: usize,
    ) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::validation("X", format!("must be finite, got {x}")));
        }
        if !(quad_rel_tol.is_finite() && quad_rel_tol > 0.0) {
            return Err(Error::validation("quad_rel_tol", format!("must be > 0, got {quad_rel_tol}")));
        }
        if !(quad_abs_tol.is_finite() && quad_abs_tol >= 0.0) {
            return Err(Error::validation("quad_abs_tol", format!("must be >= 0, got {quad_abs_tol}")));
        }
        if max_cutoff_iters < 1 {
            return Err(Error::validation("max_cutoff_iters", "must be >= 1"));
        }
        if let CutoffPolicy::Fixed(t) = cutoff {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::validation("cutoff", format!("fixed cutoff must be > 0 s, got {t}")));
            }
        }
        Ok(DetectorConfig { x, cutoff, quad_rel_tol, quad_abs_tol, max_cutoff_iters })
    }

    pub fn with_x(&self, x: f64) -> Result<Self> {
        DetectorConfig::new(x, self.cutoff, self.quad_rel_tol, self.quad_abs_tol, self.max_cutoff_iters)
    }

    /// Checks the invariants that couple the detector to a packet.
    pub fn check_against(&self, params: &PacketParams) -> Result<()> {
        if matches!(self.cutoff, CutoffPolicy::ThreeSigma) && params.u <= 0.0 {
            return Err(Error::validation(
                "u",
                format!("three-sigma cutoff needs u > 0 (packet approaching the detector), got {}", params.u),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn fig1_params_convert_mass() {
        let p = make_params(1e-5, 1e3, 10.0, 1.0).unwrap();
        assert!(rel(p.mass, 1.6605e-24) < 1e-4);
        assert_eq!(p.hbar, HBAR_CGS);
        assert!(p.wave_number().is_finite());
    }

    #[test]
    fn fig2_params_are_valid() {
        let p = make_params(1e-4, 1e3, 100.0, 1.0).unwrap();
        assert_eq!(p.c, 100.0);
        assert!(p.mean_momentum() > 0.0);
    }

    #[test]
    fn zero_velocity_minimum_uncertainty() {
        let p = make_params(1.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(p.mean_momentum(), 0.0);
        assert_eq!(uncertainty_product(&p), p.hbar / 2.0);
    }

    #[test]
    fn rejects_bad_fields_by_name() {
        match make_params(0.0, 1.0, 0.0, 1.0) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "sigma0"),
            other => panic!("unexpected {other:?}"),
        }
        match make_params(1e-5, 1.0, 0.0, -2.0) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "mass"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(make_params(1e-5, f64::NAN, 0.0, 1.0).is_err());
        assert!(make_params(1e-5, 1.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn uncertainty_product_values() {
        let p10 = make_params(1e-5, 1e3, 10.0, 1.0).unwrap();
        assert!(rel(uncertainty_product(&p10), 0.5 * HBAR_CGS * 101f64.sqrt()) < 1e-15);
        let plus = make_params(1e-5, 1e3, 3.0, 1.0).unwrap();
        let minus = make_params(1e-5, 1e3, -3.0, 1.0).unwrap();
        assert_eq!(uncertainty_product(&plus), uncertainty_product(&minus));
        assert!(rel(uncertainty_product(&minus), 0.5 * HBAR_CGS * 10f64.sqrt()) < 1e-15);
    }

    #[test]
    fn detector_validation() {
        assert!(DetectorConfig::at(5.1).is_ok());
        assert!(DetectorConfig::new(5.1, CutoffPolicy::ThreeSigma, 0.0, 0.0, 10).is_err());
        assert!(DetectorConfig::new(5.1, CutoffPolicy::ThreeSigma, 1e-9, -1.0, 10).is_err());
        assert!(DetectorConfig::new(5.1, CutoffPolicy::ThreeSigma, 1e-9, 0.0, 0).is_err());
        assert!(DetectorConfig::new(5.1, CutoffPolicy::Fixed(-1.0), 1e-9, 0.0, 10).is_err());
        let back = make_params(1e-4, -10.0, 0.0, 1.0).unwrap();
        assert!(DetectorConfig::at(5.1).unwrap().check_against(&back).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn uncertainty_at_least_half_hbar(c in -1e3f64..1e3, sigma0 in 1e-8f64..1.0, m in 1e-3f64..1e6) {
                let p = make_params(sigma0, 10.0, c, m).unwrap();
                let prod = uncertainty_product(&p);
                prop_assert!(prod >= p.hbar / 2.0);
                if c != 0.0 {
                    prop_assert!(prod > p.hbar / 2.0);
                }
            }

            #[test]
            fn mass_round_trip(m in 1e-3f64..1e9) {
                let p = make_params(1e-5, 1e3, 1.0, m).unwrap();
                prop_assert!(((p.mass_amu() - m) / m).abs() < 1e-12);
            }
        }
    }
}
