//! Randomized checks of the Besov-space inequalities. Each check reports the
//! largest ratio `lhs / rhs` (constant set to 1) over a set of random
//! band-limited trial fields.

use super::{
    aggregate_blocks, block_norms, dealiased_product, heat_propagate, lp_norm_with,
    paraproduct_less, resonant, DyadicPartition, Exponent, WeightSpec,
};
use crate::error::{Error, Result};
use crate::grid::{self, RealField, TorusGrid};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InequalityKind {
    Bernstein,
    Embedding,
    Derivative,
    Interpolation,
    HeatSmoothing,
    TimeRegularity,
    Paraproduct,
    Resonant,
    MultiplicativeI,
    MultiplicativeII,
    Duality,
    Gradient,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 12] = [
        InequalityKind::Bernstein,
        InequalityKind::Embedding,
        InequalityKind::Derivative,
        InequalityKind::Interpolation,
        InequalityKind::HeatSmoothing,
        InequalityKind::TimeRegularity,
        InequalityKind::Paraproduct,
        InequalityKind::Resonant,
        InequalityKind::MultiplicativeI,
        InequalityKind::MultiplicativeII,
        InequalityKind::Duality,
        InequalityKind::Gradient,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InequalityKind::Bernstein => "bernstein",
            InequalityKind::Embedding => "embedding",
            InequalityKind::Derivative => "derivative",
            InequalityKind::Interpolation => "interpolation",
            InequalityKind::HeatSmoothing => "heat-smoothing",
            InequalityKind::TimeRegularity => "time-regularity",
            InequalityKind::Paraproduct => "paraproduct",
            InequalityKind::Resonant => "resonant",
            InequalityKind::MultiplicativeI => "multiplicative-i",
            InequalityKind::MultiplicativeII => "multiplicative-ii",
            InequalityKind::Duality => "duality",
            InequalityKind::Gradient => "gradient",
        }
    }
}

impl fmt::Display for InequalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InequalityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::UnknownInequality(s.to_string()))
    }
}

/// Settings shared by all checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub weight: WeightSpec,
    /// Spectral radius of the trial fields; defaults to half the radius on
    /// which the partition sums to one, so that products stay resolved.
    pub band_radius: Option<f64>,
    pub root_seed: u64,
    /// Smallest heat time used by the smoothing checks.
    pub t_min: f64,
    /// Largest heat time used by the smoothing checks.
    pub t_max: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            weight: WeightSpec::Exponential { mu: 1.0, delta: 0.4 },
            band_radius: None,
            root_seed: 2024,
            t_min: 1e-3,
            t_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub kind: InequalityKind,
    pub trials: usize,
    pub max_ratio: f64,
    pub witness_seed: u64,
    /// Indices and weight used, for the record.
    pub setting: String,
    /// Whether the weight is small enough at the cell edge for the cell norm
    /// to stand in for a plane norm.
    pub plane_claim_ok: bool,
}

/// Seed of trial `index` under `root`; trial sets nest as the count grows.
pub fn trial_seed(root: u64, index: u64) -> u64 {
    splitmix64(root ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Decay exponents of the trial spectra, from rough to smooth. Drawn from a finite set so
/// that every pairing of extreme profiles occurs with fixed probability.
const SPECTRAL_SLOPES: [f64; 4] = [-1.0, 0.0, 1.0, 2.0];

/// Random real field whose spectrum lives in `B(0, radius)`, with a random
/// power-law envelope so that different trials load different blocks.
pub fn random_band_limited_field(grid: &TorusGrid, radius: f64, rng: &mut impl Rng) -> RealField {
    let n = grid.points_per_side();
    let noise = Array2::from_shape_fn((n, n), |_| rng.sample::<f64, _>(StandardNormal));
    let slope = SPECTRAL_SLOPES[rng.random_range(0..SPECTRAL_SLOPES.len())];
    let mut c = grid::real_to_spectral(noise.view());
    c.indexed_iter_mut().for_each(|((i, j), v)| {
        let r = grid.frequency_sq(i, j).sqrt();
        if r > radius {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= (1.0 + r).powf(-slope);
        }
    });
    RealField::from_raw(*grid, grid::spectral_to_real(c.view()))
}

fn partial(f: &RealField, axis: usize) -> RealField {
    let g = *f.grid();
    let step = g.frequency_step();
    let mut c = grid::real_to_spectral(f.values().view());
    c.indexed_iter_mut().for_each(|((i, j), v)| {
        let k = if axis == 0 { g.wavenumber(i) } else { g.wavenumber(j) };
        *v *= Complex64::new(0.0, step * k as f64);
    });
    RealField::from_raw(g, grid::spectral_to_real(c.view()))
}

struct Ctx<'a> {
    partition: &'a DyadicPartition,
    weight: WeightSpec,
}

impl Ctx<'_> {
    fn besov(&self, f: &RealField, alpha: f64, p: Exponent, q: Exponent, wscale: f64) -> Result<f64> {
        let norms = block_norms(f, self.partition, p, &self.weight.scaled(wscale))?;
        Ok(aggregate_blocks(&norms, alpha, q))
    }

    fn lp(&self, f: &RealField, p: Exponent, wscale: f64) -> f64 {
        let w = self.weight.scaled(wscale).grid_values(f.grid());
        lp_norm_with(f.values(), p, &w, f.grid().cell_area())
    }
}

fn ratio(lhs: f64, rhs: f64) -> Option<f64> {
    if lhs == 0.0 && rhs == 0.0 {
        None
    } else {
        Some(lhs / rhs)
    }
}

fn describe(kind: InequalityKind) -> &'static str {
    match kind {
        InequalityKind::Bernstein => "d/dx1, p=4, q=2, supp in B(0,lambda), lambda in {2,4,8,16}",
        InequalityKind::Embedding => "alpha=-0.5, p=4, r=2, beta=0, q=2",
        InequalityKind::Derivative => "d/dx1, alpha=0.5, p=q=2",
        InequalityKind::Interpolation => "(a0,p0,q0)=(-0.5,2,1), (a1,p1,q1)=(1,4,inf), nu uniform",
        InequalityKind::HeatSmoothing => "alpha=1, beta=-0.5, p=q=2, t log-uniform",
        InequalityKind::TimeRegularity => "alpha=-0.5, beta=1, p=q=2, t log-uniform",
        InequalityKind::Paraproduct => "a1=-0.5, a2=1, p1=p2=4, p=q=2",
        InequalityKind::Resonant => "a1=-0.5, a2=1, p1=p2=4, p=q=2",
        InequalityKind::MultiplicativeI => "alpha=0.5, p=q=2, nu=1/2 (p1=p2=4)",
        InequalityKind::MultiplicativeII => "alpha=-0.5, beta=1, p=q=2, nu=1/2 (p1=p2=4)",
        InequalityKind::Duality => "alpha=0.5, p=q=2",
        InequalityKind::Gradient => "alpha=0.5, B_{1,1}",
    }
}

fn trial_ratio(
    kind: InequalityKind,
    ctx: &Ctx,
    index: u64,
    rng: &mut ChaCha8Rng,
    band: f64,
    cfg: &VerifyConfig,
) -> Result<Option<f64>> {
    let grid = *ctx.partition.grid();
    let inf = f64::INFINITY;
    let field = |r: f64, rng: &mut ChaCha8Rng| random_band_limited_field(&grid, r, rng);
    let heat_time = |rng: &mut ChaCha8Rng| {
        let u: f64 = rng.random();
        (cfg.t_min.ln() + u * (cfg.t_max.ln() - cfg.t_min.ln())).exp()
    };
    Ok(match kind {
        InequalityKind::Bernstein => {
            let lambda = [2.0, 4.0, 8.0, 16.0][(index % 4) as usize];
            let f = field(lambda, rng);
            let (p, q) = (4.0, 2.0);
            let lhs = ctx.lp(&partial(&f, 0), p, 1.0);
            let rhs = lambda.powf(1.0 + 2.0 * (1.0 / q - 1.0 / p)) * ctx.lp(&f, q, q / p);
            ratio(lhs, rhs)
        }
        InequalityKind::Embedding => {
            let f = field(band, rng);
            let (alpha, p, r, q) = (-0.5, 4.0, 2.0, 2.0);
            let beta = alpha + 2.0 * (1.0 / r - 1.0 / p);
            ratio(ctx.besov(&f, alpha, p, q, 1.0)?, ctx.besov(&f, beta, r, q, r / p)?)
        }
        InequalityKind::Derivative => {
            let f = field(band, rng);
            let alpha = 0.5;
            ratio(
                ctx.besov(&partial(&f, 0), alpha - 1.0, 2.0, 2.0, 1.0)?,
                ctx.besov(&f, alpha, 2.0, 2.0, 1.0)?,
            )
        }
        InequalityKind::Interpolation => {
            let f = field(band, rng);
            let nu: f64 = rng.random();
            let (a0, p0, q0) = (-0.5, 2.0, 1.0);
            let (a1, p1, q1) = (1.0, 4.0, inf);
            let alpha = (1.0 - nu) * a0 + nu * a1;
            let p = 1.0 / ((1.0 - nu) / p0 + nu / p1);
            let q = 1.0 / ((1.0 - nu) / q0 + nu / q1);
            let lhs = ctx.besov(&f, alpha, p, q, 1.0)?;
            let rhs = ctx.besov(&f, a0, p0, q0, 1.0)?.powf(1.0 - nu)
                * ctx.besov(&f, a1, p1, q1, 1.0)?.powf(nu);
            ratio(lhs, rhs)
        }
        InequalityKind::HeatSmoothing => {
            let f = field(band, rng);
            let t = heat_time(rng);
            let (alpha, beta) = (1.0, -0.5);
            let lhs = ctx.besov(&heat_propagate(&f, t)?, alpha, 2.0, 2.0, 1.0)?;
            ratio(lhs, t.powf(0.5 * (beta - alpha)) * ctx.besov(&f, beta, 2.0, 2.0, 1.0)?)
        }
        InequalityKind::TimeRegularity => {
            let f = field(band, rng);
            let t = heat_time(rng);
            let (alpha, beta) = (-0.5, 1.0);
            let diff = f.axpby(1.0, &heat_propagate(&f, t)?, -1.0)?;
            let lhs = ctx.besov(&diff, alpha, 2.0, 2.0, 1.0)?;
            ratio(lhs, t.powf(0.5 * (beta - alpha)) * ctx.besov(&f, beta, 2.0, 2.0, 1.0)?)
        }
        InequalityKind::Paraproduct | InequalityKind::Resonant => {
            let f = field(band, rng);
            let g = field(band, rng);
            let (a1, a2, p1, p2, q): (f64, f64, f64, f64, f64) = (-0.5, 1.0, 4.0, 4.0, 2.0);
            let p = 1.0 / (1.0 / p1 + 1.0 / p2);
            let (prod, alpha) = if kind == InequalityKind::Paraproduct {
                (paraproduct_less(&f, &g, ctx.partition)?, a1.min(0.0) + a2)
            } else {
                (resonant(&f, &g, ctx.partition)?, a1 + a2)
            };
            let lhs = ctx.besov(&prod, alpha, p, q, 1.0)?;
            ratio(lhs, ctx.besov(&f, a1, p1, inf, 1.0)? * ctx.besov(&g, a2, p2, q, 1.0)?)
        }
        InequalityKind::MultiplicativeI | InequalityKind::MultiplicativeII => {
            let f = field(band, rng);
            let g = field(band, rng);
            let (p, q, nu) = (2.0, 2.0, 0.5);
            let (p1, p2) = (p / nu, p / (1.0 - nu));
            let (alpha, beta) = if kind == InequalityKind::MultiplicativeI {
                (0.5, 0.5)
            } else {
                (-0.5, 1.0)
            };
            let lhs = ctx.besov(&dealiased_product(&f, &g)?, alpha, p, q, 1.0)?;
            ratio(lhs, ctx.besov(&f, alpha, p1, q, 1.0)? * ctx.besov(&g, beta, p2, q, 1.0)?)
        }
        InequalityKind::Duality => {
            let f = field(band, rng);
            let g = field(band, rng);
            let alpha = 0.5;
            let w = ctx.weight.grid_values(&grid);
            let pairing: f64 = (f.values() * g.values() * &w).sum() * grid.cell_area();
            let rhs = ctx.besov(&f, alpha, 2.0, 2.0, 1.0)? * ctx.besov(&g, -alpha, 2.0, 2.0, 1.0)?;
            ratio(pairing.abs(), rhs)
        }
        InequalityKind::Gradient => {
            let f = field(band, rng);
            let alpha = 0.5;
            let (d1, d2) = (partial(&f, 0), partial(&f, 1));
            let grad = RealField::from_raw(
                grid,
                ndarray::Zip::from(d1.values())
                    .and(d2.values())
                    .map_collect(|a, b| a.hypot(*b)),
            );
            let l1 = ctx.lp(&f, 1.0, 1.0);
            let rhs = l1.powf(1.0 - alpha) * ctx.lp(&grad, 1.0, 1.0).powf(alpha) + l1;
            ratio(ctx.besov(&f, alpha, 1.0, 1.0, 1.0)?, rhs)
        }
    })
}

/// Runs `trial_count` random trials of one inequality.
pub fn verify_inequality(
    kind: InequalityKind,
    trial_count: usize,
    partition: &DyadicPartition,
    config: &VerifyConfig,
) -> Result<VerifyReport> {
    config.weight.validate()?;
    let band = config
        .band_radius
        .unwrap_or(0.5 * partition.resolved_radius());
    let ctx = Ctx {
        partition,
        weight: config.weight,
    };
    let mut best = (0.0f64, trial_seed(config.root_seed, 0));
    for i in 0..trial_count as u64 {
        let seed = trial_seed(config.root_seed, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(r) = trial_ratio(kind, &ctx, i, &mut rng, band, config)? {
            if r > best.0 || r.is_nan() {
                best = (r, seed);
            }
        }
    }
    Ok(VerifyReport {
        kind,
        trials: trial_count,
        max_ratio: best.0,
        witness_seed: best.1,
        setting: format!("{}; weight {:?}", describe(kind), config.weight),
        plane_claim_ok: config.weight.cell_truncation_ok(partition.grid().side_length()),
    })
}
