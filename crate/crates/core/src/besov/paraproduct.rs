//! Bony decomposition. Every product is formed on a grid padded by 3/2 and
//! projected back, so band-limited inputs multiply exactly.

use super::{block_spectra, DyadicPartition};
use crate::error::Result;
use crate::grid::{self, RealField};
use ndarray::Array2;
use num_complex::Complex64;

/// `sum_i a_i b_i` evaluated on the padded grid and projected to `n` points.
fn padded_sum_of_products<'a>(
    pairs: impl Iterator<Item = (&'a Array2<Complex64>, Array2<Complex64>)>,
    n: usize,
) -> Array2<f64> {
    let l = grid::padded_size_quadratic(n);
    let mut acc = Array2::<f64>::zeros((l, l));
    for (a, b) in pairs {
        let pa = grid::resample_spectrum(a.view(), l);
        let pb = grid::resample_spectrum(b.view(), l);
        let (ra, rb) = grid::spectral_to_real_pair(pa.view(), pb.view());
        acc += &(&ra * &rb);
    }
    let c = grid::resample_spectrum(grid::real_to_spectral(acc.view()).view(), n);
    grid::spectral_to_real(c.view())
}

fn spectra(f: &RealField, g: &RealField, partition: &DyadicPartition) -> Result<(Vec<Array2<Complex64>>, Vec<Array2<Complex64>>)> {
    grid::check_same(f.grid(), g.grid())?;
    grid::check_same(f.grid(), partition.grid())?;
    let fb = block_spectra(&grid::real_to_spectral(f.values().view()), partition);
    let gb = block_spectra(&grid::real_to_spectral(g.values().view()), partition);
    Ok((fb, gb))
}

/// `f < g = sum_k S_{k-1} f delta_k g` with `S_{k-1} f = sum_{j <= k-2} delta_j f`.
pub fn paraproduct_less(f: &RealField, g: &RealField, partition: &DyadicPartition) -> Result<RealField> {
    let (fb, gb) = spectra(f, g, partition)?;
    let n = f.grid().points_per_side();
    // position i in the block lists holds k = i - 1
    let mut low = Vec::with_capacity(gb.len());
    let mut running = Array2::<Complex64>::zeros((n, n));
    for i in 2..gb.len() {
        running += &fb[i - 2];
        low.push((i, running.clone()));
    }
    let vals = padded_sum_of_products(low.iter().map(|(i, s)| (&gb[*i], s.clone())), n);
    Ok(RealField::from_raw(*f.grid(), vals))
}

/// `f (.) g = sum_{|j-k| <= 1} delta_j f delta_k g`.
pub fn resonant(f: &RealField, g: &RealField, partition: &DyadicPartition) -> Result<RealField> {
    let (fb, gb) = spectra(f, g, partition)?;
    let n = f.grid().points_per_side();
    let last = gb.len() - 1;
    let vals = padded_sum_of_products(
        (0..=last).map(|i| {
            let mut near = gb[i].clone();
            if i > 0 {
                near += &gb[i - 1];
            }
            if i < last {
                near += &gb[i + 1];
            }
            (&fb[i], near)
        }),
        n,
    );
    Ok(RealField::from_raw(*f.grid(), vals))
}

/// The product `fg` projected onto the grid after 3/2 padding.
pub fn dealiased_product(f: &RealField, g: &RealField) -> Result<RealField> {
    grid::check_same(f.grid(), g.grid())?;
    let n = f.grid().points_per_side();
    let gs = grid::real_to_spectral(g.values().view());
    let fs = grid::real_to_spectral(f.values().view());
    let vals = padded_sum_of_products(std::iter::once((&fs, gs)), n);
    Ok(RealField::from_raw(*f.grid(), vals))
}
