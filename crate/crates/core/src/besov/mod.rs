//! Littlewood-Paley analysis on the torus: the dyadic partition of unity,
//! weighted Lebesgue and Besov norms, paraproducts, the heat semigroup and
//! numerical checks of the associated inequalities.

pub mod gevrey;
mod paraproduct;
pub mod verify;

use crate::error::{Error, Result};
use crate::grid::{self, RealField, TorusGrid};
use ndarray::{Array2, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use gevrey::{bump_spacing, fourier_decay_check, gevrey_bump_1d, DecayFit};
pub use paraproduct::{dealiased_product, paraproduct_less, resonant};
pub use verify::{verify_inequality, InequalityKind, VerifyConfig, VerifyReport};

/// Inner and outer radii of the annulus carrying `chi`.
pub const ANNULUS_INNER: f64 = 3.0 / 4.0;
pub const ANNULUS_OUTER: f64 = 8.0 / 3.0;
/// `chi_tilde` vanishes outside this ball.
pub const LOW_RADIUS: f64 = 4.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub theta: f64,
    pub delta: f64,
    pub k_max: i32,
}

impl PartitionConfig {
    /// Largest `k_max` whose outer annulus fits under the Nyquist frequency.
    pub fn max_resolved(grid: &TorusGrid) -> i32 {
        (grid.nyquist() / ANNULUS_OUTER).log2().floor() as i32
    }

    /// Config using every block the grid resolves.
    pub fn for_grid(grid: &TorusGrid, theta: f64, delta: f64) -> Self {
        Self {
            theta,
            delta,
            k_max: Self::max_resolved(grid),
        }
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        if !(self.theta > 1.0) {
            return Err(Error::ThetaOutOfRange(self.theta));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidPartition(format!("delta = {}", self.delta)));
        }
        if self.theta * self.delta >= 1.0 {
            return Err(Error::InvalidPartition(format!(
                "need theta < 1/delta, got theta = {}, delta = {}",
                self.theta, self.delta
            )));
        }
        if self.k_max < 1 {
            return Err(Error::InvalidPartition(format!("k_max = {}", self.k_max)));
        }
        let needed = 2f64.powi(self.k_max) * ANNULUS_OUTER;
        if needed > grid.nyquist() {
            return Err(Error::GridTooCoarse {
                k_max: self.k_max,
                needed,
                nyquist: grid.nyquist(),
            });
        }
        Ok(())
    }
}

/// Radial cutoff: 1 on `B(0, 3/4)`, 0 outside `B(0, 4/3)`.
pub fn low_cutoff(r: f64, theta: f64) -> f64 {
    gevrey::smooth_step((LOW_RADIUS - r) / (LOW_RADIUS - ANNULUS_INNER), theta)
}

/// Annulus profile `chi(zeta) = psi(zeta/2) - psi(zeta)`, supported in `B(0,8/3) \ B(0,3/4)`.
pub fn annulus_profile(r: f64, theta: f64) -> f64 {
    low_cutoff(0.5 * r, theta) - low_cutoff(r, theta)
}

/// The partition `{chi_tilde, chi_0, ..., chi_kmax}` sampled on grid frequencies.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    grid: TorusGrid,
    config: PartitionConfig,
    chi_tilde: Array2<f64>,
    chi_k: Vec<Array2<f64>>,
}

impl DyadicPartition {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn config(&self) -> &PartitionConfig {
        &self.config
    }

    pub fn k_max(&self) -> i32 {
        self.config.k_max
    }

    pub fn chi_tilde(&self) -> &Array2<f64> {
        &self.chi_tilde
    }

    pub fn chi_k(&self) -> &[Array2<f64>] {
        &self.chi_k
    }

    /// Multiplier of block `k` (`k = -1` is `chi_tilde`).
    pub fn multiplier(&self, k: i32) -> Result<&Array2<f64>> {
        match k {
            -1 => Ok(&self.chi_tilde),
            k if (0..=self.config.k_max).contains(&k) => Ok(&self.chi_k[k as usize]),
            _ => Err(Error::BlockIndexOutOfRange(k, self.config.k_max)),
        }
    }

    /// Block multipliers in order `k = -1, 0, ..., k_max`.
    pub fn multipliers(&self) -> impl Iterator<Item = &Array2<f64>> {
        std::iter::once(&self.chi_tilde).chain(self.chi_k.iter())
    }

    /// Radius below which the partition sums to one.
    pub fn resolved_radius(&self) -> f64 {
        2f64.powi(self.config.k_max) * 1.5
    }

    /// Largest deviation of `chi_tilde + sum chi_k` from 1 over frequencies
    /// with `|zeta| <= 2^kmax * 4/3`.
    pub fn unity_deviation(&self) -> f64 {
        let lim = 2f64.powi(self.config.k_max) * LOW_RADIUS;
        let mag = grid::wavenumber_magnitudes(&self.grid);
        let mut dev = 0.0f64;
        for ((idx, &r), &t) in mag.indexed_iter().zip(self.chi_tilde.iter()) {
            if r <= lim {
                let s: f64 = t + self.chi_k.iter().map(|c| c[idx]).sum::<f64>();
                dev = dev.max((s - 1.0).abs());
            }
        }
        dev
    }
}

pub fn build_partition(grid: &TorusGrid, config: PartitionConfig) -> Result<DyadicPartition> {
    config.validate(grid)?;
    let mag = grid::wavenumber_magnitudes(grid);
    let chi_k: Vec<Array2<f64>> = (0..=config.k_max)
        .map(|k| {
            let s = 2f64.powi(-k);
            mag.mapv(|r| annulus_profile(r * s, config.theta))
        })
        .collect();
    let mut chi_tilde = Array2::zeros(mag.dim());
    for (idx, &r) in mag.indexed_iter() {
        if r < LOW_RADIUS {
            let s: f64 = chi_k.iter().map(|c| c[idx]).sum();
            chi_tilde[idx] = (1.0 - s).clamp(0.0, 1.0);
        }
    }
    Ok(DyadicPartition {
        grid: *grid,
        config,
        chi_tilde,
        chi_k,
    })
}

pub(crate) fn block_spectra(
    f_hat: &Array2<Complex64>,
    partition: &DyadicPartition,
) -> Vec<Array2<Complex64>> {
    partition.multipliers().map(|m| f_hat * m).collect()
}

/// Inverse transforms a list of Hermitian spectra, two per FFT.
pub(crate) fn to_real_many(spectra: &[Array2<Complex64>]) -> Vec<Array2<f64>> {
    let mut out = Vec::with_capacity(spectra.len());
    let mut it = spectra.chunks(2);
    for pair in &mut it {
        if pair.len() == 2 {
            let (a, b) = grid::spectral_to_real_pair(pair[0].view(), pair[1].view());
            out.push(a);
            out.push(b);
        } else {
            out.push(grid::spectral_to_real(pair[0].view()));
        }
    }
    out
}

/// Littlewood-Paley block `delta_k f`.
pub fn lp_block(f: &RealField, partition: &DyadicPartition, k: i32) -> Result<RealField> {
    grid::check_same(f.grid(), partition.grid())?;
    let m = partition.multiplier(k)?;
    let c = grid::real_to_spectral(f.values().view()) * m;
    Ok(RealField::from_raw(*f.grid(), grid::spectral_to_real(c.view())))
}

/// All blocks `delta_{-1} f, ..., delta_{kmax} f`.
pub fn lp_blocks(f: &RealField, partition: &DyadicPartition) -> Result<Vec<RealField>> {
    grid::check_same(f.grid(), partition.grid())?;
    let spectra = block_spectra(&grid::real_to_spectral(f.values().view()), partition);
    Ok(to_real_many(&spectra)
        .into_iter()
        .map(|v| RealField::from_raw(*f.grid(), v))
        .collect())
}

/// Spatial weight on the period cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum WeightSpec {
    /// `exp(-mu |x|_*^delta)`.
    Exponential { mu: f64, delta: f64 },
    /// `|x|_*^{-sigma}`.
    Polynomial { sigma: f64 },
    Flat,
}

/// `|x|_* = sqrt(1 + |x|^2)`.
pub fn japanese_bracket(x1: f64, x2: f64) -> f64 {
    (1.0 + x1 * x1 + x2 * x2).sqrt()
}

impl WeightSpec {
    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        match *self {
            WeightSpec::Exponential { mu, delta } => {
                (-mu * japanese_bracket(x1, x2).powf(delta)).exp()
            }
            WeightSpec::Polynomial { sigma } => japanese_bracket(x1, x2).powf(-sigma),
            WeightSpec::Flat => 1.0,
        }
    }

    /// The weight raised to the power `s` (`mu -> s mu`, `sigma -> s sigma`).
    pub fn scaled(&self, s: f64) -> Self {
        match *self {
            WeightSpec::Exponential { mu, delta } => WeightSpec::Exponential { mu: s * mu, delta },
            WeightSpec::Polynomial { sigma } => WeightSpec::Polynomial { sigma: s * sigma },
            WeightSpec::Flat => WeightSpec::Flat,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            WeightSpec::Exponential { mu, delta } => mu >= 0.0 && delta > 0.0 && delta < 1.0,
            WeightSpec::Polynomial { sigma } => sigma >= 0.0,
            WeightSpec::Flat => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid weight {self:?}")))
        }
    }

    pub fn grid_values(&self, grid: &TorusGrid) -> Array2<f64> {
        let n = grid.points_per_side();
        Array2::from_shape_fn((n, n), |(i, j)| {
            self.value(grid.coordinate(i), grid.coordinate(j))
        })
    }

    /// Whether the weight at distance `M/2` has dropped below `1e-6` of its
    /// value at the origin, so that a cell norm stands in for a plane norm.
    pub fn cell_truncation_ok(&self, side_length: f64) -> bool {
        match self {
            WeightSpec::Flat => false,
            w => w.value(0.5 * side_length, 0.0) < 1e-6 * w.value(0.0, 0.0),
        }
    }
}

/// Exponent in `[1, inf]`; `f64::INFINITY` selects the supremum.
pub type Exponent = f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub alpha: f64,
    pub p: Exponent,
    pub q: Exponent,
    pub weight: WeightSpec,
}

impl BesovParams {
    pub fn new(alpha: f64, p: Exponent, q: Exponent, weight: WeightSpec) -> Self {
        Self { alpha, p, q, weight }
    }
}

pub(crate) fn lp_norm_with(values: &Array2<f64>, p: Exponent, w: &Array2<f64>, area: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let mut s = 0.0;
    if p == 2.0 {
        Zip::from(values).and(w).for_each(|&v, &w| s += v * v * w);
    } else if p == 1.0 {
        Zip::from(values).and(w).for_each(|&v, &w| s += v.abs() * w);
    } else {
        let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if top == 0.0 || !top.is_finite() {
            return top;
        }
        Zip::from(values)
            .and(w)
            .for_each(|&v, &w| s += (v.abs() / top).powf(p) * w);
        return top * (s * area).powf(1.0 / p);
    }
    (s * area).powf(1.0 / p)
}

/// `(sum |f|^p w h^2)^{1/p}` over the cell, or the grid maximum when `p = inf`.
pub fn weighted_lp_norm(f: &RealField, p: Exponent, weight: &WeightSpec) -> f64 {
    let w = weight.grid_values(f.grid());
    lp_norm_with(f.values(), p, &w, f.grid().cell_area())
}

pub(crate) fn lq_aggregate(terms: impl Iterator<Item = f64>, q: Exponent) -> f64 {
    if q.is_infinite() {
        terms.fold(0.0, f64::max)
    } else if q == 1.0 {
        terms.sum()
    } else {
        // Scaled by the largest term so that large `q` cannot overflow.
        let terms: Vec<f64> = terms.collect();
        let top = terms.iter().copied().fold(0.0, f64::max);
        if top == 0.0 || !top.is_finite() {
            return top;
        }
        top * terms.iter().map(|t| (t / top).powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Block norms `||delta_k f||` for `k = -1..=kmax`, weighted as in `params`.
pub fn block_norms(
    f: &RealField,
    partition: &DyadicPartition,
    p: Exponent,
    weight: &WeightSpec,
) -> Result<Vec<f64>> {
    let w = weight.grid_values(f.grid());
    let area = f.grid().cell_area();
    Ok(lp_blocks(f, partition)?
        .iter()
        .map(|b| lp_norm_with(b.values(), p, &w, area))
        .collect())
}

/// `|| (2^{alpha k} ||delta_k f||_{L^p_w})_{k=-1..kmax} ||_{l^q}`.
pub fn besov_norm(f: &RealField, partition: &DyadicPartition, params: &BesovParams) -> Result<f64> {
    let norms = block_norms(f, partition, params.p, &params.weight)?;
    Ok(aggregate_blocks(&norms, params.alpha, params.q))
}

/// Combines precomputed block norms (ordered from `k = -1`) into a Besov norm.
pub fn aggregate_blocks(norms: &[f64], alpha: f64, q: Exponent) -> f64 {
    lq_aggregate(
        norms
            .iter()
            .enumerate()
            .map(|(i, &b)| 2f64.powf(alpha * (i as f64 - 1.0)) * b),
        q,
    )
}

/// `e^{t Delta} f`, i.e. multiplication of the spectrum by `e^{-t |zeta|^2}`.
pub fn heat_propagate(f: &RealField, t: f64) -> Result<RealField> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let g = f.grid();
    let mut c = grid::real_to_spectral(f.values().view());
    c.indexed_iter_mut()
        .for_each(|((i, j), v)| *v *= (-t * g.frequency_sq(i, j)).exp());
    Ok(RealField::from_raw(*g, grid::spectral_to_real(c.view())))
}
