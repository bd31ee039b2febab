//! Exact-in-law Ornstein-Uhlenbeck sampling of the heat solution, mode by mode.

use super::noise::{CellNoise, NoiseStream};
use super::renorm::ou_mode_variance;
use crate::error::{Error, Result};
use crate::grid::{self, check_same, RealField, TorusGrid};
use ndarray::{Array2, Zip};
use num_complex::Complex64;

/// Spectral state of `Z` (zero initial datum) and of `V = e^{tΔ} X₀`.
pub struct HeatSampler {
    grid: TorusGrid,
    noise: CellNoise,
    lambda: Array2<f64>,
    z_hat: Array2<Complex64>,
    x0_hat: Option<Array2<Complex64>>,
    /// `E|Ẑ_t(k)|²` per mode.
    variance: Array2<f64>,
    t: f64,
    cached: Option<(f64, Array2<f64>, Array2<f64>)>,
}

impl HeatSampler {
    pub fn new(stream: &NoiseStream, grid: &TorusGrid, x0: Option<&RealField>) -> Result<Self> {
        Self::with_noise(CellNoise::new(stream, grid), grid, x0)
    }

    pub fn with_noise(noise: CellNoise, grid: &TorusGrid, x0: Option<&RealField>) -> Result<Self> {
        let x0_hat = match x0 {
            Some(f) => {
                check_same(f.grid(), grid)?;
                Some(grid::real_to_spectral(f.values().view()))
            }
            None => None,
        };
        let n = grid.points_per_side();
        Ok(Self {
            grid: *grid,
            noise,
            lambda: Array2::from_shape_fn((n, n), |(i, j)| grid.frequency_sq(i, j)),
            z_hat: Array2::zeros((n, n)),
            x0_hat,
            variance: Array2::zeros((n, n)),
            t: 0.0,
            cached: None,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn lambda(&self) -> &Array2<f64> {
        &self.lambda
    }

    pub fn z_spectrum(&self) -> &Array2<Complex64> {
        &self.z_hat
    }

    pub fn mode_variance(&self) -> &Array2<f64> {
        &self.variance
    }

    /// Pointwise variance of the sampled field, `Σ_k E|Ẑ_t(k)|²`.
    pub fn pointwise_variance(&self) -> f64 {
        self.variance.sum()
    }

    pub fn has_initial_datum(&self) -> bool {
        self.x0_hat.is_some()
    }

    /// Advances by `dt` through `substeps` exact updates `Ẑ ← e^{−λδ} Ẑ + η`, each driven by the
    /// cell noise of its sub-interval; runs with different `dt` thus share `Z` at common times.
    pub fn advance(&mut self, dt: f64, substeps: usize) {
        let substeps = substeps.max(1);
        let delta = dt / substeps as f64;
        for _ in 0..substeps {
            self.exact_update(delta);
        }
    }

    fn exact_update(&mut self, dt: f64) {
        let inc = self.noise.increment(dt, 1);
        let dw = grid::real_to_spectral(inc.view());
        if self.cached.as_ref().map(|c| c.0) != Some(dt) {
            let decay = self.lambda.mapv(|l| (-l * dt).exp());
            let scale = self.lambda.mapv(|l| (ou_mode_variance(l, dt) / dt).sqrt());
            self.cached = Some((dt, decay, scale));
        }
        let (_, decay, scale) = self.cached.as_ref().expect("set above");
        let q = 1.0 / self.grid.side_length().powi(2);
        Zip::from(&mut self.z_hat)
            .and(&dw)
            .and(decay)
            .and(scale)
            .for_each(|z, &w, &e, &s| *z = *z * e + w * s);
        Zip::from(&mut self.variance)
            .and(decay)
            .and(scale)
            .for_each(|v, &e, &s| *v = e * e * *v + s * s * dt * q);
        self.t += dt;
    }

    /// `V̂(t) = e^{−λt} X̂₀` at an arbitrary time.
    pub fn v_spectrum_at(&self, t: f64) -> Option<Array2<Complex64>> {
        self.x0_hat.as_ref().map(|x| {
            let mut v = x.clone();
            Zip::from(&mut v).and(&self.lambda).for_each(|c, &l| *c *= (-l * t).exp());
            v
        })
    }

    /// Real-space `Z_t` and `V_t`.
    pub fn fields(&self) -> (Array2<f64>, Array2<f64>) {
        match self.v_spectrum_at(self.t) {
            Some(v) => grid::spectral_to_real_pair(self.z_hat.view(), v.view()),
            None => {
                let n = self.grid.points_per_side();
                (grid::spectral_to_real(self.z_hat.view()), Array2::zeros((n, n)))
            }
        }
    }
}

/// Samples `Z` (zero initial datum) and `V = e^{tΔ}X₀` at the requested times.
pub fn sample_heat_solution(
    stream: &NoiseStream,
    grid: &TorusGrid,
    times: &[f64],
    x0: Option<&RealField>,
) -> Result<(Vec<RealField>, Vec<RealField>)> {
    check_times(times)?;
    let mut s = HeatSampler::new(stream, grid, x0)?;
    let mut zs = Vec::with_capacity(times.len());
    let mut vs = Vec::with_capacity(times.len());
    for &t in times {
        if t > s.time() {
            s.advance(t - s.time(), 1);
        }
        let (z, v) = s.fields();
        zs.push(RealField::from_raw(*grid, z));
        vs.push(RealField::from_raw(*grid, v));
    }
    Ok((zs, vs))
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    let ok = times.first().is_none_or(|&t| t >= 0.0) && times.windows(2).all(|w| w[1] > w[0]);
    if ok && times.iter().all(|t| t.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonIncreasingTimes)
    }
}
