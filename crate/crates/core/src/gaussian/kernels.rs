//! Heat kernel and the analytic covariance kernels of the heat solution.

use super::renorm::QUAD_REL_TOL;
use crate::error::{Error, Result};
use crate::quad::integrate;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Underflow threshold for `e^{-x}`.
const EXP_CUTOFF: f64 = 745.0;

/// `K(t, x) = (4πt)^{-1} e^{−|x|²/(4t)}`.
pub fn heat_kernel(t: f64, x: [f64; 2]) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (-(x[0] * x[0] + x[1] * x[1]) / (4.0 * t)).exp() / (4.0 * PI * t)
}

/// Side length of the periodic domain; `Infinite` is the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceQuery {
    pub t1: f64,
    pub t2: f64,
    pub x: [f64; 2],
    pub period: Period,
}

impl CovarianceQuery {
    pub fn new(t1: f64, t2: f64, x: [f64; 2], period: Period) -> Self {
        Self { t1, t2, x, period }
    }
}

/// Distance from `x` to the lattice `M Z²`, i.e. `|x|_M`.
pub fn periodic_distance(x: [f64; 2], period: Period) -> f64 {
    match period {
        Period::Infinite => x[0].hypot(x[1]),
        Period::Finite(m) => {
            let r = |v: f64| v - m * (v / m).round();
            r(x[0]).hypot(r(x[1]))
        }
    }
}

/// `Σ_n e^{−(x − nM)²/(4ℓ)}`, summed outward from the nearest image until a term drops
/// below `1e-16` of the running sum.
fn image_sum(x: f64, m: f64, ell: f64) -> f64 {
    let x0 = x - m * (x / m).round();
    let term = |n: f64| (-(x0 - n * m).powi(2) / (4.0 * ell)).exp();
    let mut s = term(0.0);
    let mut n = 1.0;
    loop {
        let t = term(n) + term(-n);
        s += t;
        if t <= 1e-16 * s {
            break;
        }
        n += 1.0;
    }
    s
}

/// `𝒦(t1, t2; x) = (8π)^{-1} ∫_{|t1−t2|}^{t1+t2} ℓ^{-1} Σ_y e^{−|x−y|²/(4ℓ)} dℓ`,
/// the sum running over `M Z²` (only `y = 0` on the plane).
pub fn covariance_exact(q: &CovarianceQuery) -> Result<f64> {
    for t in [q.t1, q.t2] {
        if !(t >= 0.0) {
            return Err(Error::TimeOutOfRange(t));
        }
    }
    if let Period::Finite(m) = q.period {
        if !(m > 0.0) {
            return Err(Error::InvalidGrid(format!("side length {m}")));
        }
    }
    let (lo, hi) = ((q.t1 - q.t2).abs(), q.t1 + q.t2);
    if hi <= lo {
        return Ok(0.0);
    }
    let d = periodic_distance(q.x, q.period);
    let lo = if lo > 0.0 {
        lo
    } else if d > 0.0 {
        (d * d / (4.0 * EXP_CUTOFF)).min(hi)
    } else {
        return Err(Error::DivergentKernel);
    };
    let x = q.x;
    let lattice = |ell: f64| match q.period {
        Period::Infinite => (-(x[0] * x[0] + x[1] * x[1]) / (4.0 * ell)).exp(),
        Period::Finite(m) => image_sum(x[0], m, ell) * image_sum(x[1], m, ell),
    };
    let r = integrate(|u| lattice(u.exp()), lo.ln(), hi.ln(), QUAD_REL_TOL, 1e-300)?;
    Ok(r.value / (8.0 * PI))
}

/// `Φ(b) − Φ(a)` for the standard normal distribution function, without cancellation
/// in either tail.
fn normal_mass(a: f64, b: f64) -> f64 {
    let s = FRAC_1_SQRT_2;
    if a >= 0.0 {
        0.5 * (erfc(a * s) - erfc(b * s))
    } else if b <= 0.0 {
        0.5 * (erfc(-b * s) - erfc(-a * s))
    } else {
        1.0 - 0.5 * (erfc(-a * s) + erfc(b * s))
    }
}

/// Value of the mixed kernel together with whether `|x1|, |x2| ≤ M/8` held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedKernel {
    pub value: f64,
    pub in_regime: bool,
}

/// `𝒦_{M,∞}(t; x1, x2) = Σ_{y ∈ MZ²} ∫_0^t ∫_{[−M/2,M/2]²} K(t−r, x1−x2−z) K(t−r, −z−y) dz dr`.
///
/// The cell integral factorizes per axis into a Gaussian in `d + y` times a normal mass
/// over the cell, leaving a one-dimensional quadrature in `s = t − r`.
pub fn kernel_mixed(t: f64, x1: [f64; 2], x2: [f64; 2], m: f64) -> Result<MixedKernel> {
    if !(t >= 0.0) {
        return Err(Error::TimeOutOfRange(t));
    }
    if !(m > 0.0) {
        return Err(Error::InvalidGrid(format!("side length {m}")));
    }
    let in_regime = x1[0].hypot(x1[1]) <= m / 8.0 && x2[0].hypot(x2[1]) <= m / 8.0;
    if t == 0.0 {
        return Ok(MixedKernel { value: 0.0, in_regime });
    }
    let d = [x1[0] - x2[0], x1[1] - x2[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    if dd == 0.0 {
        return Err(Error::DivergentKernel);
    }
    let axis = |di: f64, s: f64| {
        let rs = s.sqrt();
        let term = |n: f64| {
            let y = n * m;
            let g = (-(di + y).powi(2) / (8.0 * s)).exp() / (8.0 * PI * s).sqrt();
            if g == 0.0 {
                return 0.0;
            }
            let mid = 0.5 * (di - y);
            g * normal_mass((-0.5 * m - mid) / rs, (0.5 * m - mid) / rs)
        };
        let n0 = -(di / m).round();
        let mut sum = term(n0);
        let mut k = 1.0;
        loop {
            let t = term(n0 + k) + term(n0 - k);
            sum += t;
            if t <= 1e-16 * sum {
                break;
            }
            k += 1.0;
        }
        sum
    };
    let lo = (dd / (8.0 * EXP_CUTOFF)).min(t);
    let f = |u: f64| {
        let s = u.exp();
        s * axis(d[0], s) * axis(d[1], s)
    };
    let r = integrate(f, lo.ln(), t.ln(), QUAD_REL_TOL, 1e-300)?;
    Ok(MixedKernel { value: r.value, in_regime })
}
