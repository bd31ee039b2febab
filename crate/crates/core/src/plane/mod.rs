//! Plane approximation: periodized initial data, tiling onto larger tori and the
//! Cauchy-in-`M` studies of periodized stacks and solutions.

mod study;

use crate::besov::gevrey::smooth_step;
use crate::besov::{besov_norm, BesovParams, DyadicPartition};
use crate::error::{Error, Result};
use crate::grid::{RealField, TorusGrid};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use study::{
    decay_exponent, solution_convergence_study, solution_convergence_study_with, stack_convergence_study,
    DecayRow, SeedCurve, SolutionDecay, SolutionStudyConfig, StackDecay, StackStudyConfig, SupNormRecord,
};

/// Gevrey index of the radial cutoff.
const CUTOFF_THETA: f64 = 2.0;

/// Radii, in units of `M`, of the plateau and the support of the cutoff `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodizationConfig {
    pub bump_inner: f64,
    pub bump_outer: f64,
}

impl Default for PeriodizationConfig {
    fn default() -> Self {
        Self { bump_inner: 0.25, bump_outer: 1.0 / 3.0 }
    }
}

impl PeriodizationConfig {
    pub fn validate(&self) -> Result<()> {
        if 0.0 < self.bump_inner && self.bump_inner < self.bump_outer && self.bump_outer < 0.5 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "need 0 < bump_inner < bump_outer < 1/2, got {} and {}",
                self.bump_inner, self.bump_outer
            )))
        }
    }

    /// `φ(x/M)`: one on `B(0, inner M)`, zero outside `B(0, outer M)`.
    pub fn cutoff(&self, x1: f64, x2: f64, m: f64) -> f64 {
        let r = (x1 * x1 + x2 * x2).sqrt() / m;
        smooth_step((self.bump_outer - r) / (self.bump_outer - self.bump_inner), CUTOFF_THETA)
    }
}

/// Index offset of a centred `n`-point cell inside an `ns`-point grid of the same spacing.
fn centred_offset(grid: &TorusGrid, outer: &TorusGrid) -> Result<usize> {
    let (n, ns) = (grid.points_per_side(), outer.points_per_side());
    let same_h = (grid.spacing() - outer.spacing()).abs() <= 1e-12 * grid.spacing();
    if !same_h || ns < n || (ns - n) % 2 != 0 {
        return Err(Error::IncommensurateGrids(format!(
            "M = {} (h = {}) does not sit centred in M = {} (h = {})",
            grid.side_length(),
            grid.spacing(),
            outer.side_length(),
            outer.spacing()
        )));
    }
    Ok((ns - n) / 2)
}

/// `X_M = Σ_{z ∈ MZ²} (φ_M X₀)(· − z)` on the `M`-torus with the spacing of `X₀`.
pub fn periodize_initial(x0: &RealField, m: f64, config: &PeriodizationConfig) -> Result<RealField> {
    config.validate()?;
    let src = x0.grid();
    if m > src.side_length() * (1.0 + 1e-12) {
        return Err(Error::IncommensurateGrids(format!(
            "M = {m} exceeds the reference torus {}",
            src.side_length()
        )));
    }
    let grid = TorusGrid::with_spacing(m, src.spacing())?;
    let off = centred_offset(&grid, src)? as i64;
    let n = grid.points_per_side() as i64;
    let mut out = Array2::zeros((n as usize, n as usize));
    for ((i, j), &v) in x0.values().indexed_iter() {
        let phi = config.cutoff(src.coordinate(i), src.coordinate(j), m);
        if phi != 0.0 {
            let a = (i as i64 - off).rem_euclid(n) as usize;
            let b = (j as i64 - off).rem_euclid(n) as usize;
            out[[a, b]] += phi * v;
        }
    }
    RealField::new(grid, out)
}

/// Periodic extension of an `M`-periodic field to a torus whose side is a multiple of `M`.
pub fn tile(f: &RealField, target: &TorusGrid) -> Result<RealField> {
    let g = f.grid();
    let ratio = target.side_length() / g.side_length();
    if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
        return Err(Error::NestingViolation(format!(
            "M = {} does not divide {}",
            g.side_length(),
            target.side_length()
        )));
    }
    let off = centred_offset(g, target)? as i64;
    let n = g.points_per_side() as i64;
    let nt = target.points_per_side();
    let v = f.values();
    let out = Array2::from_shape_fn((nt, nt), |(i, j)| {
        v[[(i as i64 - off).rem_euclid(n) as usize, (j as i64 - off).rem_euclid(n) as usize]]
    });
    RealField::new(*target, out)
}

/// Besov norm of `a − b` after tiling both onto the grid of `partition`.
pub fn weighted_difference(
    a: &RealField,
    b: &RealField,
    partition: &DyadicPartition,
    params: &BesovParams,
) -> Result<f64> {
    let target = partition.grid();
    let d = tile(a, target)?.axpby(1.0, &tile(b, target)?, -1.0)?;
    besov_norm(&d, partition, params)
}
