//! Reproducible space-time white noise, realized as independent cell increments.

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseStream {
    pub root_seed: u64,
    pub stream_id: u64,
    /// Flip the sign of every increment.
    #[serde(default)]
    pub negate: bool,
}

impl NoiseStream {
    pub fn new(root_seed: u64, stream_id: u64) -> Self {
        Self { root_seed, stream_id, negate: false }
    }

    pub fn negated(self) -> Self {
        Self { negate: !self.negate, ..self }
    }

    pub(crate) fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Draws `ξ([t, t+dt) × cell)` for every grid cell: i.i.d. `N(0, dt/h²)` in the
/// pointwise normalization, so its discrete transform has mode variance `dt/M²`.
///
/// The draws can be taken on a larger source torus with the same spacing and cropped to
/// the centred cell, which realizes the noise of the small torus as the periodization
/// of the restriction of the large one.
pub struct CellNoise {
    rng: ChaCha20Rng,
    sign: f64,
    source_n: usize,
    offset: usize,
    n: usize,
    inv_h: f64,
}

impl CellNoise {
    pub fn new(stream: &NoiseStream, grid: &TorusGrid) -> Self {
        Self::build(stream, grid, grid.points_per_side())
    }

    pub fn windowed(stream: &NoiseStream, grid: &TorusGrid, source: &TorusGrid) -> Result<Self> {
        let (n, ns) = (grid.points_per_side(), source.points_per_side());
        let same_spacing = (grid.spacing() - source.spacing()).abs() <= 1e-12 * grid.spacing();
        if !same_spacing || ns < n || (ns - n) % 2 != 0 {
            return Err(Error::IncommensurateGrids(format!(
                "cannot crop N = {n} (h = {}) out of N = {ns} (h = {})",
                grid.spacing(),
                source.spacing()
            )));
        }
        Ok(Self::build(stream, grid, ns))
    }

    fn build(stream: &NoiseStream, grid: &TorusGrid, source_n: usize) -> Self {
        let n = grid.points_per_side();
        Self {
            rng: stream.rng(),
            sign: if stream.negate { -1.0 } else { 1.0 },
            source_n,
            offset: (source_n - n) / 2,
            n,
            inv_h: 1.0 / grid.spacing(),
        }
    }

    /// Noise over a step of length `dt`, summed from `substeps` equal sub-intervals so that a
    /// coarse step consumes exactly the randomness of its fine counterpart.
    pub fn increment(&mut self, dt: f64, substeps: usize) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        let scale = self.sign * (dt / substeps as f64).sqrt() * self.inv_h;
        let (lo, hi) = (self.offset, self.offset + self.n);
        for _ in 0..substeps {
            for i in 0..self.source_n {
                for j in 0..self.source_n {
                    let z: f64 = StandardNormal.sample(&mut self.rng);
                    if (lo..hi).contains(&i) && (lo..hi).contains(&j) {
                        out[[i - lo, j - lo]] += scale * z;
                    }
                }
            }
        }
        out
    }
}
