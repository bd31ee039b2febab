//! Renormalization constants and the grid Wick variance.

use crate::error::{Error, Result};
use crate::grid::{wavenumber, TorusGrid};
use crate::quad::integrate;
use std::f64::consts::PI;

pub(crate) const QUAD_REL_TOL: f64 = 1e-10;

/// `log(1/t) / (8π)`.
pub fn renorm_constant_exact(t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::TimeOutOfRange(t));
    }
    Ok((1.0 / t).ln() / (8.0 * PI))
}

/// `∫_t^1 ∫_cell K_M(r, x)² dx dr` for the periodized heat kernel on the torus of side `m`.
pub fn renorm_constant_torus(t: f64, m: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::TimeOutOfRange(t));
    }
    if !(m >= 1.0) {
        return Err(Error::InvalidGrid(format!("side length {m} below 1")));
    }
    renorm_shift_torus(t, m)
}

/// Same integral as [`renorm_constant_torus`] without the `t ≤ 1` restriction; for `t > 1`
/// the orientation of the time integral flips and the value is negative.
pub fn renorm_shift_torus(t: f64, m: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::TimeOutOfRange(t));
    }
    Ok(-t.ln() / (8.0 * PI) + torus_excess(t, m)?)
}

/// `𝔠_M(t) − 𝔠(t) = ∫_t^1 (8πr)^{-1} Σ_{y ∈ MZ², y≠0} e^{−|y|²/(8r)} dr`.
pub(crate) fn torus_excess(t: f64, m: f64) -> Result<f64> {
    // r = e^u turns dr/r into du
    let f = |u: f64| {
        let r = u.exp();
        let s = theta_tail(m * m / (8.0 * r));
        (2.0 * s + s * s) / (8.0 * PI)
    };
    let q = integrate(f, t.ln(), 0.0, QUAD_REL_TOL, 1e-300)?;
    Ok(q.value)
}

/// `Σ_{n≠0} e^{−a n²}`.
pub(crate) fn theta_tail(a: f64) -> f64 {
    let mut s = 0.0;
    let mut n = 1.0f64;
    loop {
        let term = (-a * n * n).exp();
        s += term;
        if term <= 1e-17 * s || term == 0.0 {
            break;
        }
        n += 1.0;
    }
    2.0 * s
}

/// The bound `(2/π)^{3/2} M^{-1} e^{−M²/2}` on `|𝔠 − 𝔠_M|`.
pub fn ct_bound(m: f64) -> f64 {
    (2.0 / PI).powf(1.5) / m * (-m * m / 2.0).exp()
}

/// Pointwise variance of the discretized zero-initial heat solution at time `t`:
/// `M^{-2} [t + Σ_{k≠0} (1 − e^{−2|ζ_k|² t}) / (2|ζ_k|²)]`.
pub fn grid_wick_variance(grid: &TorusGrid, t: f64) -> f64 {
    let n = grid.points_per_side();
    let step = grid.frequency_step();
    let sq: Vec<f64> = (0..n).map(|i| (step * wavenumber(i, n) as f64).powi(2)).collect();
    let mut sum = t;
    for (i, a) in sq.iter().enumerate() {
        for (j, b) in sq.iter().enumerate() {
            if i == 0 && j == 0 {
                continue;
            }
            sum += ou_mode_variance(a + b, t);
        }
    }
    sum / grid.side_length().powi(2)
}

/// `(1 − e^{−2λt}) / (2λ)`, continuous at `λ = 0`.
pub(crate) fn ou_mode_variance(lambda: f64, t: f64) -> f64 {
    let x = 2.0 * lambda * t;
    if x < 1e-12 {
        t
    } else {
        -(-x).exp_m1() / (2.0 * lambda)
    }
}

/// Iterates the one-step variance recursion `v ← e^{−2λdt} v + (1 − e^{−2λdt})/(2λM²)`.
pub fn ou_variance_recursion(lambda: f64, dt: f64, steps: usize, m: f64) -> f64 {
    let decay = (-2.0 * lambda * dt).exp();
    let inc = ou_mode_variance(lambda, dt) / (m * m);
    (0..steps).fold(0.0, |v, _| decay * v + inc)
}
