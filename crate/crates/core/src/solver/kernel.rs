//! Padded nonlinearity, exponential Euler propagation and Picard sweeps over a window.

use super::PicardInit;
use crate::error::{Error, Result};
use crate::gaussian::StepStack;
use crate::grid::{
    real_to_spectral, real_to_spectral_pair, resample_spectrum, spectral_to_real,
    spectral_to_real_pair, TorusGrid,
};
use ndarray::{Array2, ArrayView2, Zip};
use num_complex::Complex64;

/// Ceiling on the Picard increment beyond which the iteration is declared divergent.
const DIVERGENCE_CEILING: f64 = 1e12;

/// Stack data for one step in the form the nonlinearity consumes.
pub(crate) struct PaddedStep {
    /// `Z1`, `Z2` at the step midpoint, interpolated onto the `2N` grid.
    z1p: Array2<f64>,
    z2p: Array2<f64>,
    /// Spectrum of `a Z1 − Z3` at the midpoint.
    lin_hat: Array2<Complex64>,
    /// `Z1` at the end of the step.
    pub z1_end: Array2<f64>,
}

/// `φ₁(z) = (e^z − 1)/z` with `φ₁(0) = 1`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0
    } else {
        z.exp_m1() / z
    }
}

pub(crate) struct Propagator {
    n: usize,
    n2: usize,
    a: f64,
    dt: f64,
    lambda: Array2<f64>,
    decay: Array2<f64>,
    phi_dt: Array2<f64>,
}

impl Propagator {
    pub fn new(grid: &TorusGrid, a: f64, dt: f64) -> Self {
        let n = grid.points_per_side();
        let lambda = Array2::from_shape_fn((n, n), |(i, j)| grid.frequency_sq(i, j));
        Self {
            n,
            n2: 2 * n,
            a,
            dt,
            decay: lambda.mapv(|l| (-l * dt).exp()),
            phi_dt: lambda.mapv(|l| phi1(-l * dt) * dt),
            lambda,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn pad_step(&self, s: StepStack) -> PaddedStep {
        self.pad_steps(s, None).0
    }

    /// Pads two steps at once. Transforms are shared only between fields of equal parity
    /// under `(Z1, Z2, Z3) ↦ (−Z1, Z2, −Z3)`, so negating the noise negates the output exactly.
    pub fn pad_steps(&self, a: StepStack, b: Option<StepStack>) -> (PaddedStep, Option<PaddedStep>) {
        let (z1a, z3a) = real_to_spectral_pair(a.z1.view(), a.z3.view());
        let (z1b, z3b, z2a, z2b) = match &b {
            Some(b) => {
                let (z1b, z3b) = real_to_spectral_pair(b.z1.view(), b.z3.view());
                let (z2a, z2b) = real_to_spectral_pair(a.z2.view(), b.z2.view());
                (Some(z1b), Some(z3b), z2a, Some(z2b))
            }
            None => (None, None, real_to_spectral(a.z2.view()), None),
        };
        let up = |c: &Array2<Complex64>| resample_spectrum(c.view(), self.n2);
        let real2 = |x: &Array2<Complex64>, y: Option<&Array2<Complex64>>| match y {
            Some(y) => {
                let (p, q) = spectral_to_real_pair(up(x).view(), up(y).view());
                (p, Some(q))
            }
            None => (spectral_to_real(up(x).view()), None),
        };
        let (z1pa, z1pb) = real2(&z1a, z1b.as_ref());
        let (z2pa, z2pb) = real2(&z2a, z2b.as_ref());
        let lin = |z1: &Array2<Complex64>, z3: &Array2<Complex64>| {
            Zip::from(z1).and(z3).map_collect(|&p, &q| p * self.a - q)
        };
        let pa = PaddedStep { z1p: z1pa, z2p: z2pa, lin_hat: lin(&z1a, &z3a), z1_end: a.z1_end };
        let pb = b.map(|b| PaddedStep {
            z1p: z1pb.expect("paired"),
            z2p: z2pb.expect("paired"),
            lin_hat: lin(z1b.as_ref().expect("paired"), z3b.as_ref().expect("paired")),
            z1_end: b.z1_end,
        });
        (pa, pb)
    }

    /// `Ẑ1` at the midpoint of a step, recovered from the padded samples.
    pub fn z1_hat(&self, s: &PaddedStep) -> Array2<Complex64> {
        resample_spectrum(real_to_spectral(s.z1p.view()).view(), self.n)
    }

    fn cubic_part(y: &mut Array2<f64>, s: &PaddedStep) {
        Zip::from(y).and(&s.z1p).and(&s.z2p).for_each(|y, &z1, &z2| {
            let v = *y;
            *y = -v * (v * v + 3.0 * v * z1 + 3.0 * z2);
        });
    }

    fn finish(&self, cubic: &Array2<Complex64>, y: &Array2<Complex64>, s: &PaddedStep) -> Array2<Complex64> {
        let mut out = resample_spectrum(cubic.view(), self.n);
        Zip::from(&mut out)
            .and(y)
            .and(&s.lin_hat)
            .for_each(|o, &yy, &l| *o += yy * self.a + l);
        out
    }

    /// `Ψ̂(Y, Z̲) = P_N[−Y³ − 3Y²Z1 − 3YZ2] + aŶ + aẐ1 − Ẑ3`.
    pub fn psi(&self, y: &Array2<Complex64>, s: &PaddedStep) -> Array2<Complex64> {
        let mut r = spectral_to_real(resample_spectrum(y.view(), self.n2).view());
        Self::cubic_part(&mut r, s);
        self.finish(&real_to_spectral(r.view()), y, s)
    }

    /// Two independent evaluations of [`Self::psi`] sharing their transforms.
    pub fn psi_pair(
        &self,
        ya: &Array2<Complex64>,
        sa: &PaddedStep,
        yb: &Array2<Complex64>,
        sb: &PaddedStep,
    ) -> (Array2<Complex64>, Array2<Complex64>) {
        let (mut ra, mut rb) = spectral_to_real_pair(
            resample_spectrum(ya.view(), self.n2).view(),
            resample_spectrum(yb.view(), self.n2).view(),
        );
        Self::cubic_part(&mut ra, sa);
        Self::cubic_part(&mut rb, sb);
        let (ca, cb) = real_to_spectral_pair(ra.view(), rb.view());
        (self.finish(&ca, ya, sa), self.finish(&cb, yb, sb))
    }

    /// `e^{−λdt} Ŷ + φ₁(−λdt) dt Ψ̂`.
    pub fn advance(&self, y: &Array2<Complex64>, psi: &Array2<Complex64>) -> Array2<Complex64> {
        let mut out = y.clone();
        Zip::from(&mut out)
            .and(psi)
            .and(&self.decay)
            .and(&self.phi_dt)
            .for_each(|o, &p, &e, &f| *o = *o * e + p * f);
        out
    }

    pub fn heat(&self, y: &Array2<Complex64>, t: f64) -> Array2<Complex64> {
        Zip::from(y).and(&self.lambda).map_collect(|&c, &l| c * (-l * t).exp())
    }
}

/// `Σ_k |f̂_k|`, an upper bound for the sup norm of the trigonometric polynomial.
pub(crate) fn sup_bound(a: ArrayView2<Complex64>, b: ArrayView2<Complex64>) -> f64 {
    let mut s = 0.0;
    Zip::from(a).and(b).for_each(|x, y| s += (x - y).norm());
    s
}

fn all_finite(y: &Array2<Complex64>) -> bool {
    y.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

pub(crate) struct WindowSolution {
    /// `Ŷ` at the window nodes, starting with the initial value.
    pub y: Vec<Array2<Complex64>>,
    /// `Ψ̂` on each step, evaluated at the last-but-one iterate.
    pub psi: Vec<Array2<Complex64>>,
    pub sweeps: usize,
    pub differences: Vec<f64>,
}

/// Jacobi sweeps of the discrete mild map
/// `Y_{j+1} = e^{−λdt} Y_j + φ₁ dt Ψ̂(Y_j^{old}, Z̲_j)` until the sup-norm bound of the
/// increment falls below `tol`.
pub(crate) fn picard_window(
    prop: &Propagator,
    steps: &[PaddedStep],
    y0: &Array2<Complex64>,
    init: PicardInit,
    tol: f64,
    max_iters: usize,
) -> Result<WindowSolution> {
    let w = steps.len();
    let mut old: Vec<Array2<Complex64>> = Vec::with_capacity(w + 1);
    old.push(y0.clone());
    match init {
        PicardInit::Predictor => {
            // Sequential stepping lands on the fixed point directly: a further sweep would
            // re-evaluate the same Ψ̂ on the same inputs.
            let mut psi = Vec::with_capacity(w);
            for s in steps {
                let last = old.last().expect("non-empty");
                let p = prop.psi(last, s);
                let next = prop.advance(last, &p);
                if !all_finite(&next) {
                    return Err(Error::PicardDiverged { iters: 1, last_diff: f64::INFINITY });
                }
                psi.push(p);
                old.push(next);
            }
            return Ok(WindowSolution { y: old, psi, sweeps: 1, differences: vec![0.0] });
        }
        PicardInit::Zero => old.extend((0..w).map(|_| Array2::zeros(y0.raw_dim()))),
        PicardInit::HeatNoise => {
            let base = y0 + &prop.z1_hat(&steps[0]);
            old.extend((1..=w).map(|j| prop.heat(&base, j as f64 * prop.dt())));
        }
    }
    let mut differences = Vec::new();
    for sweep in 1..=max_iters {
        let mut psi = Vec::with_capacity(w);
        let mut j = 0;
        while j < w {
            if j + 1 < w {
                let (a, b) = prop.psi_pair(&old[j], &steps[j], &old[j + 1], &steps[j + 1]);
                psi.push(a);
                psi.push(b);
                j += 2;
            } else {
                psi.push(prop.psi(&old[j], &steps[j]));
                j += 1;
            }
        }
        let mut new = Vec::with_capacity(w + 1);
        new.push(y0.clone());
        let mut diff = 0.0f64;
        for (j, p) in psi.iter().enumerate() {
            let next = prop.advance(&new[j], p);
            diff = diff.max(sup_bound(next.view(), old[j + 1].view()));
            new.push(next);
        }
        differences.push(diff);
        if !diff.is_finite() || diff > DIVERGENCE_CEILING {
            return Err(Error::PicardDiverged { iters: sweep, last_diff: diff });
        }
        if diff < tol {
            return Ok(WindowSolution { y: new, psi, sweeps: sweep, differences });
        }
        old = new;
    }
    Err(Error::PicardDiverged {
        iters: max_iters,
        last_diff: differences.last().copied().unwrap_or(f64::NAN),
    })
}
