//! Step-by-step Wick stack generation for time stepping.

use super::noise::{CellNoise, NoiseStream};
use super::sampler::HeatSampler;
use super::wick::{wick_arrays, WickConvention};
use crate::error::Result;
use crate::grid::{self, RealField, TorusGrid};
use ndarray::{Array2, Zip};

/// Stack for one time step `[t, t + dt]`.
pub struct StepStack {
    pub t: f64,
    pub dt: f64,
    /// Wick powers of the linear interpolant of `Z = W + V` at `t + dt/2`.
    pub z1: Array2<f64>,
    pub z2: Array2<f64>,
    pub z3: Array2<f64>,
    /// Variance of the interpolated Gaussian part at the midpoint.
    pub c_mid: f64,
    pub shift: f64,
    /// `Z1` at the end of the step.
    pub z1_end: Array2<f64>,
}

pub struct StackStream {
    sampler: HeatSampler,
    dt: f64,
    substeps: usize,
    convention: WickConvention,
    w: Array2<f64>,
    v: Array2<f64>,
    step: usize,
}

impl StackStream {
    pub fn new(
        stream: &NoiseStream,
        grid: &TorusGrid,
        dt: f64,
        substeps: usize,
        convention: WickConvention,
        x0: Option<&RealField>,
    ) -> Result<Self> {
        Self::with_noise(CellNoise::new(stream, grid), grid, dt, substeps, convention, x0)
    }

    pub fn with_noise(
        noise: CellNoise,
        grid: &TorusGrid,
        dt: f64,
        substeps: usize,
        convention: WickConvention,
        x0: Option<&RealField>,
    ) -> Result<Self> {
        let sampler = HeatSampler::with_noise(noise, grid, x0)?;
        let (w, v) = sampler.fields();
        Ok(Self { sampler, dt, substeps: substeps.max(1), convention, w, v, step: 0 })
    }

    pub fn grid(&self) -> &TorusGrid {
        self.sampler.grid()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    /// `Z1` at the current node.
    pub fn z1_now(&self) -> Array2<f64> {
        &self.w + &self.v
    }

    pub fn advance(&mut self) -> Result<StepStack> {
        let t = self.time();
        let dt = self.dt;
        let m = self.grid().side_length();
        // variance of (Ẑ_n + Ẑ_{n+1})/2 with Ẑ_{n+1} = e^{−λdt} Ẑ_n + η
        let before = self.sampler.mode_variance().clone();
        self.sampler.advance(dt, self.substeps);
        let mut c_mid = 0.0;
        Zip::from(&before)
            .and(self.sampler.mode_variance())
            .and(self.sampler.lambda())
            .for_each(|&v0, &v1, &l| {
                let e = (-l * dt).exp();
                let q = v1 - e * e * v0;
                c_mid += 0.25 * (v0 * (1.0 + e) * (1.0 + e) + q);
            });
        self.step += 1;
        let (w1, v1) = if self.sampler.has_initial_datum() {
            self.sampler.fields()
        } else {
            let n = self.grid().points_per_side();
            (grid::spectral_to_real(self.sampler.z_spectrum().view()), Array2::zeros((n, n)))
        };
        let wm = 0.5 * (&self.w + &w1);
        let vm = 0.5 * (&self.v + &v1);
        let shift = self.convention.shift(t + 0.5 * dt, m)?;
        let (z1, z2, z3) = wick_arrays(wm.view(), Some(vm.view()), c_mid + shift);
        self.w = w1;
        self.v = v1;
        Ok(StepStack { t, dt, z1, z2, z3, c_mid, shift, z1_end: self.z1_now() })
    }
}
