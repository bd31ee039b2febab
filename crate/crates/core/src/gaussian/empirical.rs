//! Monte Carlo covariance estimates of the sampled heat solution.

use super::noise::NoiseStream;
use super::sampler::HeatSampler;
use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use ndarray::{Array2, Zip};
use serde::Serialize;

pub const MIN_REALIZATIONS: usize = 100;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovarianceEstimate {
    pub lag: [f64; 2],
    pub mean: f64,
    pub std_error: f64,
}

fn lag_table(grid: &TorusGrid, lag: [f64; 2]) -> Array2<f64> {
    let n = grid.points_per_side();
    let s = grid.frequency_step();
    Array2::from_shape_fn((n, n), |(i, j)| {
        (s * (grid.wavenumber(i) as f64 * lag[0] + grid.wavenumber(j) as f64 * lag[1])).cos()
    })
}

/// Average of `Z(t,x) Z(t,x+lag)` over base points per realization, then over realizations.
///
/// The spatial average is `Σ_k |Ẑ_t(k)|² cos(ζ_k·lag)`, which also covers off-grid lags
/// through the trigonometric interpolant.
pub fn empirical_covariance(
    streams: &[NoiseStream],
    grid: &TorusGrid,
    t: f64,
    lags: &[[f64; 2]],
) -> Result<Vec<CovarianceEstimate>> {
    if streams.len() < MIN_REALIZATIONS {
        return Err(Error::TooFewRealizations { needed: MIN_REALIZATIONS, got: streams.len() });
    }
    if !(t > 0.0) {
        return Err(Error::TimeOutOfRange(t));
    }
    let tables: Vec<Array2<f64>> = lags.iter().map(|&l| lag_table(grid, l)).collect();
    let mut samples = vec![Vec::with_capacity(streams.len()); lags.len()];
    for s in streams {
        let mut sampler = HeatSampler::new(s, grid, None)?;
        sampler.advance(t, 1);
        let power = sampler.z_spectrum().mapv(|c| c.norm_sqr());
        for (tab, out) in tables.iter().zip(samples.iter_mut()) {
            let mut acc = 0.0;
            Zip::from(&power).and(tab).for_each(|&p, &c| acc += p * c);
            out.push(acc);
        }
    }
    Ok(lags
        .iter()
        .zip(samples)
        .map(|(&lag, xs)| {
            let (mean, se) = mean_and_error(&xs);
            CovarianceEstimate { lag, mean, std_error: se }
        })
        .collect())
}

/// Expected value of the estimator: `Σ_k E|Ẑ_t(k)|² cos(ζ_k·lag)`.
pub fn grid_covariance(grid: &TorusGrid, t: f64, lag: [f64; 2]) -> f64 {
    let m2 = grid.side_length().powi(2);
    let tab = lag_table(grid, lag);
    let mut acc = 0.0;
    tab.indexed_iter().for_each(|((i, j), &c)| {
        acc += c * super::renorm::ou_mode_variance(grid.frequency_sq(i, j), t) / m2;
    });
    acc
}

/// Sample mean and its standard error.
pub fn mean_and_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
