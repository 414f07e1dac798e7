use thiserror::Error;

/// Everything that can go wrong while building parameters or evaluating
/// an observable.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("quadrature did not converge on [{lo:e}, {hi:e}]: estimated error {error:e} exceeds tolerance {tol:e}")]
    Quadrature { lo: f64, hi: f64, error: f64, tol: f64 },

    #[error("cutoff fixed point did not converge after {iters} iterations (last T = {last:e} s); spreading outruns transport, supply a fixed cutoff instead")]
    CutoffNonConvergence { iters: usize, last: f64 },

    #[error("flux integral {denominator:e} at X = {x:e} cm is below the absolute tolerance {tol:e}; the packet never reaches the detector")]
    DenominatorVanishes { x: f64, denominator: f64, tol: f64 },

    #[error("{quantity} undefined at x = {x:e} cm, t = {t:e} s: density underflows to zero")]
    Domain { quantity: &'static str, x: f64, t: f64 },
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation { field, reason: reason.into() }
    }

    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Validation { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
