//! Exact evaluation of the terms of the `L^p` energy identity for band-limited `Y`.

use crate::grid::{
    real_to_spectral_pair, resample_spectrum, spectral_to_real, spectral_to_real_pair, TorusGrid,
};
use ndarray::{Array2, Zip};
use num_complex::Complex64;

/// Evaluates `∫Y^p`, `⟨ΔY, Y^{p−1}⟩` and `⟨Ψ, Y^{p−1}⟩` on a grid fine enough that the
/// degree-`p` integrands are resolved up to the extreme Nyquist corner.
pub(crate) struct EnergyProbe {
    l: usize,
    p: i32,
    area: f64,
    cell: f64,
    lambda: Array2<f64>,
}

pub(crate) struct NodeEnergy {
    /// `(1/p) ∫ Y^p`.
    pub energy: f64,
    /// `⟨ΔY, Y^{p−1}⟩ = −(p−1)⟨∇Y, Y^{p−2}∇Y⟩`.
    pub diffusion: f64,
    /// Spectrum of `Y^{p−1}` on the fine grid; empty when only the norm was requested.
    power_hat: Option<Array2<Complex64>>,
}

impl EnergyProbe {
    pub fn new(grid: &TorusGrid, p: u32) -> Self {
        let n = grid.points_per_side();
        let l = n.max(p as usize * n / 2);
        let l = l + (l & 1);
        let fine = grid.resampled(l).expect("even refinement of a valid grid");
        Self {
            l,
            p: p as i32,
            area: grid.side_length().powi(2),
            cell: fine.cell_area(),
            lambda: Array2::from_shape_fn((l, l), |(i, j)| fine.frequency_sq(i, j)),
        }
    }

    fn energy_of(&self, y: &Array2<f64>) -> f64 {
        y.iter().map(|v| v.powi(self.p)).sum::<f64>() * self.cell / self.p as f64
    }

    fn inner(&self, f: &Array2<Complex64>, g: &Array2<Complex64>) -> f64 {
        let mut s = 0.0;
        Zip::from(f).and(g).for_each(|a, b| s += (a * b.conj()).re);
        s * self.area
    }

    fn diffusion(&self, y_l: &Array2<Complex64>, g: &Array2<Complex64>) -> f64 {
        let mut s = 0.0;
        Zip::from(y_l)
            .and(g)
            .and(&self.lambda)
            .for_each(|a, b, &l| s -= l * (a * b.conj()).re);
        s * self.area
    }

    /// Energies of one or two nodes; `full` adds the diffusion term and keeps `Y^{p−1}`.
    pub fn nodes(
        &self,
        a: &Array2<Complex64>,
        b: Option<&Array2<Complex64>>,
        full: bool,
    ) -> (NodeEnergy, Option<NodeEnergy>) {
        let pad_a = resample_spectrum(a.view(), self.l);
        let pad_b = b.map(|b| resample_spectrum(b.view(), self.l));
        let (ra, rb) = match &pad_b {
            Some(pb) => {
                let (x, y) = spectral_to_real_pair(pad_a.view(), pb.view());
                (x, Some(y))
            }
            None => (spectral_to_real(pad_a.view()), None),
        };
        let ea = self.energy_of(&ra);
        let eb = rb.as_ref().map(|r| self.energy_of(r));
        if !full {
            let node = |e| NodeEnergy { energy: e, diffusion: f64::NAN, power_hat: None };
            return (node(ea), eb.map(node));
        }
        let q = self.p - 1;
        let ga = ra.mapv(|v| v.powi(q));
        let gb = rb.map(|r| r.mapv(|v| v.powi(q))).unwrap_or_else(|| Array2::zeros(ga.raw_dim()));
        let (ha, hb) = real_to_spectral_pair(ga.view(), gb.view());
        let na = NodeEnergy { energy: ea, diffusion: self.diffusion(&pad_a, &ha), power_hat: Some(ha) };
        let nb = pad_b.map(|pb| NodeEnergy {
            energy: eb.expect("paired"),
            diffusion: self.diffusion(&pb, &hb),
            power_hat: Some(hb),
        });
        (na, nb)
    }

    /// `⟨Ψ, Y^{p−1}⟩` for a spectrum given on the coarse grid.
    pub fn forcing(&self, psi_l: &Array2<Complex64>, node: &NodeEnergy) -> f64 {
        node.power_hat.as_ref().map_or(f64::NAN, |g| self.inner(psi_l, g))
    }

    pub fn lift(&self, coarse: &Array2<Complex64>) -> Array2<Complex64> {
        resample_spectrum(coarse.view(), self.l)
    }

    pub fn norm(&self, node: &NodeEnergy) -> f64 {
        (self.p as f64 * node.energy).max(0.0).powf(1.0 / self.p as f64)
    }
}

/// Trapezoidal residual of `(1/p)(‖Y_{n+1}‖^p − ‖Y_n‖^p) = ∫ [⟨ΔY, Y^{p−1}⟩ + ⟨Ψ_n, Y^{p−1}⟩]`
/// with the forcing frozen on the interval.
pub(crate) fn interval_residual(
    probe: &EnergyProbe,
    psi_l: Option<&Array2<Complex64>>,
    start: &NodeEnergy,
    end: &NodeEnergy,
    dt: f64,
) -> f64 {
    let f = |n: &NodeEnergy| n.diffusion + psi_l.map_or(0.0, |p| probe.forcing(p, n));
    end.energy - start.energy - 0.5 * dt * (f(start) + f(end))
}
