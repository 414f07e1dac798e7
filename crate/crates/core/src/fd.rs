//! Central-difference residuals of the transport equations, used as
//! independent checks of the closed forms.

/// ∂ρ/∂t + ∂J/∂x at (x, t) by second-order central differences.
pub fn continuity_residual<R, J>(rho: R, current: J, x: f64, t: f64, hx: f64, ht: f64) -> f64
where
    R: Fn(f64, f64) -> f64,
    J: Fn(f64, f64) -> f64,
{
    let drho_dt = (rho(x, t + ht) - rho(x, t - ht)) / (2.0 * ht);
    let dj_dx = (current(x + hx, t) - current(x - hx, t)) / (2.0 * hx);
    drho_dt + dj_dx
}

/// ∂D/∂t + (p/m)∂D/∂x at (x, p, t) for free motion.
pub fn liouville_residual<D>(density: D, mass: f64, x: f64, p: f64, t: f64, hx: f64, ht: f64) -> f64
where
    D: Fn(f64, f64, f64) -> f64,
{
    let dd_dt = (density(x, p, t + ht) - density(x, p, t - ht)) / (2.0 * ht);
    let dd_dx = (density(x + hx, p, t) - density(x - hx, p, t)) / (2.0 * hx);
    dd_dt + p / mass * dd_dx
}

/// Observed convergence orders from a residual evaluated at step scales
/// 1, 1/2 and 1/4: `[log2(r(1)/r(1/2)), log2(r(1/2)/r(1/4))]`.
pub fn measured_orders<F: Fn(f64) -> f64>(residual: F) -> [f64; 2] {
    let r = [residual(1.0), residual(0.5), residual(0.25)];
    [(r[0] / r[1]).log2(), (r[1] / r[2]).log2()]
}
