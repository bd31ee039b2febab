//! Periodic square grids, real and spectral fields, and the normalized DFT pair.
//!
//! Point `(i, j)` of an `N x N` array sits at `x = (i h - M/2, j h - M/2)`.
//! Spectral index `i` carries the signed wavenumber `k = i` for `i < N/2` and
//! `k = i - N` otherwise, so the Nyquist row holds `k = -N/2`.
//! Coefficients are normalized as `(1/M^2) \int f(x) e^{-i zeta.x} dx` with
//! `zeta = 2 pi k / M`, which makes them independent of the resolution.

mod fft;
pub mod snapshot;

use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView2, Zip};
use num_complex::Complex64;
use std::f64::consts::PI;

pub use snapshot::{read_snapshot, write_snapshot};

/// An `M`-periodic square torus sampled on `N x N` points.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TorusGrid {
    side_length: f64,
    points_per_side: usize,
    spacing: f64,
}

impl TorusGrid {
    pub fn new(side_length: f64, points_per_side: usize) -> Result<Self> {
        if !(side_length.is_finite() && side_length > 0.0) {
            return Err(Error::InvalidGrid(format!("side length {side_length}")));
        }
        if points_per_side < 8 || points_per_side % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per side must be even and >= 8, got {points_per_side}"
            )));
        }
        Ok(Self {
            side_length,
            points_per_side,
            spacing: side_length / points_per_side as f64,
        })
    }

    /// Grid with the given spacing; `side_length / spacing` must be an even integer.
    pub fn with_spacing(side_length: f64, spacing: f64) -> Result<Self> {
        let n = (side_length / spacing).round();
        if (n * spacing - side_length).abs() > 1e-12 * side_length {
            return Err(Error::IncommensurateGrids(format!(
                "M = {side_length} is not a multiple of h = {spacing}"
            )));
        }
        Self::new(side_length, n as usize)
    }

    /// Same torus at a different resolution.
    pub fn resampled(&self, points_per_side: usize) -> Result<Self> {
        Self::new(self.side_length, points_per_side)
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn points_per_side(&self) -> usize {
        self.points_per_side
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Cell area `h^2`.
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    /// Physical coordinate of array index `i` along either axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing - 0.5 * self.side_length
    }

    /// Signed wavenumber of spectral index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        wavenumber(i, self.points_per_side)
    }

    /// Spectral index holding wavenumber `k` (taken modulo `N`).
    pub fn spectral_index(&self, k: i64) -> usize {
        k.rem_euclid(self.points_per_side as i64) as usize
    }

    /// `2 pi / M`, the spacing of the dual lattice.
    pub fn frequency_step(&self) -> f64 {
        2.0 * PI / self.side_length
    }

    /// Largest resolved frequency along an axis, `pi N / M`.
    pub fn nyquist(&self) -> f64 {
        PI * self.points_per_side as f64 / self.side_length
    }

    /// `|zeta|^2` for spectral indices `(i, j)`.
    pub fn frequency_sq(&self, i: usize, j: usize) -> f64 {
        let s = self.frequency_step();
        let (k1, k2) = (self.wavenumber(i) as f64, self.wavenumber(j) as f64);
        s * s * (k1 * k1 + k2 * k2)
    }

    fn shape(&self) -> (usize, usize) {
        (self.points_per_side, self.points_per_side)
    }
}

pub(crate) fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Real samples of a periodic field.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: TorusGrid,
    values: Array2<f64>,
}

impl RealField {
    pub fn new(grid: TorusGrid, values: Array2<f64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::InvalidGrid(format!(
                "values have shape {:?}, grid wants {:?}",
                values.dim(),
                grid.shape()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: TorusGrid, values: Array2<f64>) -> Self {
        debug_assert_eq!(values.dim(), grid.shape());
        Self { grid, values }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::from_raw(grid, Array2::zeros(grid.shape()))
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self::from_raw(grid, Array2::from_elem(grid.shape(), c))
    }

    /// Samples `f(x1, x2)` at the grid points.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values =
            Array2::from_shape_fn(grid.shape(), |(i, j)| f(grid.coordinate(i), grid.coordinate(j)));
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.mapv(f))
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &RealField, b: f64) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        let mut out = self.values.clone();
        Zip::from(&mut out)
            .and(&other.values)
            .for_each(|x, &y| *x = a * *x + b * y);
        Ok(Self::from_raw(self.grid, out))
    }

    /// Pointwise product on the grid (no dealiasing).
    pub fn pointwise_mul(&self, other: &RealField) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        Ok(Self::from_raw(self.grid, &self.values * &other.values))
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }
}

/// Normalized Fourier coefficients of a periodic field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coefficients: Array2<Complex64>,
}

impl SpectralField {
    pub fn new(grid: TorusGrid, coefficients: Array2<Complex64>) -> Result<Self> {
        if coefficients.dim() != grid.shape() {
            return Err(Error::InvalidGrid(format!(
                "coefficients have shape {:?}, grid wants {:?}",
                coefficients.dim(),
                grid.shape()
            )));
        }
        Ok(Self { grid, coefficients })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coefficients: Array2::zeros(grid.shape()),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &Array2<Complex64> {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> Array2<Complex64> {
        self.coefficients
    }

    /// Coefficient at signed wavenumber `(k1, k2)`.
    pub fn at(&self, k1: i64, k2: i64) -> Complex64 {
        self.coefficients[[self.grid.spectral_index(k1), self.grid.spectral_index(k2)]]
    }

    /// Largest `|c(-k) - conj(c(k))|`.
    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(self.coefficients.view())
    }
}

pub(crate) fn check_same(a: &TorusGrid, b: &TorusGrid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

pub fn forward_transform(f: &RealField) -> SpectralField {
    SpectralField {
        grid: f.grid,
        coefficients: real_to_spectral(f.values.view()),
    }
}

/// Inverse of [`forward_transform`]; rejects spectra that are not Hermitian.
pub fn inverse_transform(f: &SpectralField) -> Result<RealField> {
    let scale = f.coefficients.iter().fold(1.0f64, |m, c| m.max(c.norm()));
    let dev = f.hermitian_deviation();
    if dev > 1e-10 * scale {
        return Err(Error::NonHermitianInput(dev));
    }
    Ok(RealField::from_raw(
        f.grid,
        spectral_to_real(f.coefficients.view()),
    ))
}

/// `|zeta| = (2 pi / M) |k|` for every spectral index.
pub fn wavenumber_magnitudes(grid: &TorusGrid) -> Array2<f64> {
    Array2::from_shape_fn(grid.shape(), |(i, j)| grid.frequency_sq(i, j).sqrt())
}

fn hermitian_deviation(c: ArrayView2<Complex64>) -> f64 {
    let n = c.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let (mi, mj) = ((n - i) % n, (n - j) % n);
            dev = dev.max((c[[mi, mj]] - c[[i, j]].conj()).norm());
        }
    }
    dev
}

#[inline]
fn parity_sign(i: usize, j: usize) -> f64 {
    if (i + j) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Normalized coefficients of raw samples (row-major, corner convention).
pub fn real_to_spectral(values: ArrayView2<f64>) -> Array2<Complex64> {
    let n = values.nrows();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::plan(n).forward(&mut buf);
    let norm = 1.0 / (n * n) as f64;
    let mut out = Array2::from_shape_vec((n, n), buf).expect("square buffer");
    out.indexed_iter_mut()
        .for_each(|((i, j), c)| *c *= norm * parity_sign(i, j));
    out
}

/// Samples of the trigonometric polynomial with the given coefficients (real part).
pub fn spectral_to_real(coeffs: ArrayView2<Complex64>) -> Array2<f64> {
    let n = coeffs.nrows();
    let mut buf: Vec<Complex64> = coeffs
        .indexed_iter()
        .map(|((i, j), &c)| c * parity_sign(i, j))
        .collect();
    fft::plan(n).inverse(&mut buf);
    Array2::from_shape_vec((n, n), buf.into_iter().map(|c| c.re).collect()).expect("square buffer")
}

/// Two inverse transforms of Hermitian spectra for the price of one.
pub fn spectral_to_real_pair(
    a: ArrayView2<Complex64>,
    b: ArrayView2<Complex64>,
) -> (Array2<f64>, Array2<f64>) {
    let n = a.nrows();
    let i = Complex64::new(0.0, 1.0);
    let mut buf: Vec<Complex64> = Zip::indexed(a)
        .and(b)
        .map_collect(|(p, q), &x, &y| (x + i * y) * parity_sign(p, q))
        .into_raw_vec_and_offset()
        .0;
    fft::plan(n).inverse(&mut buf);
    let re = Array2::from_shape_fn((n, n), |(p, q)| buf[p * n + q].re);
    let im = Array2::from_shape_fn((n, n), |(p, q)| buf[p * n + q].im);
    (re, im)
}

/// Two forward transforms of real samples for the price of one.
pub fn real_to_spectral_pair(
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
) -> (Array2<Complex64>, Array2<Complex64>) {
    let n = a.nrows();
    let mut buf: Vec<Complex64> = Zip::from(a)
        .and(b)
        .map_collect(|&x, &y| Complex64::new(x, y))
        .into_raw_vec_and_offset()
        .0;
    fft::plan(n).forward(&mut buf);
    let norm = 0.5 / (n * n) as f64;
    let mut fa = Vec::with_capacity(n * n);
    let mut fb = Vec::with_capacity(n * n);
    for p in 0..n {
        let row = &buf[p * n..(p + 1) * n];
        let mirror = &buf[((n - p) % n) * n..((n - p) % n + 1) * n];
        for q in 0..n {
            let c = row[q];
            let cm = mirror[if q == 0 { 0 } else { n - q }].conj();
            let s = if (p + q) & 1 == 0 { norm } else { -norm };
            let (sum, diff) = (c + cm, c - cm);
            fa.push(sum * s);
            fb.push(Complex64::new(diff.im * s, -diff.re * s));
        }
    }
    (
        Array2::from_shape_vec((n, n), fa).expect("square buffer"),
        Array2::from_shape_vec((n, n), fb).expect("square buffer"),
    )
}

/// Per-axis map from input spectral index to `(output index, weight)` pairs.
fn axis_map(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let idx = |k: i64| k.rem_euclid(n_out as i64) as usize;
    let half_in = (n_in / 2) as i64;
    let half_out = (n_out / 2) as i64;
    (0..n_in)
        .map(|i| {
            let k = wavenumber(i, n_in);
            if n_out > n_in {
                if k == -half_in {
                    vec![(idx(-half_in), 0.5), (idx(half_in), 0.5)]
                } else {
                    vec![(idx(k), 1.0)]
                }
            } else if k.abs() <= half_out {
                vec![(idx(k), 1.0)]
            } else {
                Vec::new()
            }
        })
        .collect()
}

/// Moves coefficients to a grid with `n_out` points per side.
///
/// Padding splits the Nyquist coefficient evenly between `+-N/2`; truncation
/// drops modes beyond the output Nyquist and folds `+-n_out/2` together, so
/// padding followed by truncation is the identity.
pub fn resample_spectrum(coeffs: ArrayView2<Complex64>, n_out: usize) -> Array2<Complex64> {
    let n_in = coeffs.nrows();
    if n_in == n_out {
        return coeffs.to_owned();
    }
    let map = axis_map(n_in, n_out);
    let mut out = Array2::zeros((n_out, n_out));
    for (i, ti) in map.iter().enumerate() {
        if ti.is_empty() {
            continue;
        }
        for (j, tj) in map.iter().enumerate() {
            let c = coeffs[[i, j]];
            for &(oi, wi) in ti {
                for &(oj, wj) in tj {
                    out[[oi, oj]] += c * (wi * wj);
                }
            }
        }
    }
    out
}

/// Smallest even size `>= 3n/2`, the padded grid for quadratic products.
pub fn padded_size_quadratic(n: usize) -> usize {
    let m = (3 * n).div_ceil(2);
    m + (m & 1)
}

/// Interpolates a field onto a finer grid of the same torus.
pub fn upsample(f: &RealField, n_out: usize) -> Result<RealField> {
    let grid = f.grid.resampled(n_out)?;
    let c = resample_spectrum(real_to_spectral(f.values.view()).view(), n_out);
    Ok(RealField::from_raw(grid, spectral_to_real(c.view())))
}

/// Spectral projection of a field onto a coarser grid of the same torus.
pub fn project(f: &RealField, n_out: usize) -> Result<RealField> {
    upsample(f, n_out)
}
