//! Cauchy-in-`M` measurements under common noise.

use super::{periodize_initial, weighted_difference, PeriodizationConfig};
use crate::besov::{besov_norm, build_partition, BesovParams, DyadicPartition, PartitionConfig, WeightSpec};
use crate::error::{Error, Result};
use crate::gaussian::{wick_powers, CellNoise, HeatSampler, NoiseStream, StackStream, WickConvention};
use crate::grid::{RealField, TorusGrid};
use crate::solver::{solve_global, SolverConfig, StackSource};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackStudyConfig {
    /// Grid spacing shared by every torus.
    pub spacing: f64,
    /// Increasing side lengths; `D(M)` compares `M` with `2M`.
    pub m_list: Vec<f64>,
    /// Step between sampled times.
    pub dt: f64,
    pub t_window: [f64; 2],
    pub sigma: f64,
    /// Regularity `−alpha` of the norm.
    pub alpha: f64,
    pub alpha_prime: f64,
    /// Integrability `p`; `Z^{:n:}` is measured in `L^{p/n}`.
    pub p: f64,
    pub theta: f64,
    pub delta: f64,
    pub convention: WickConvention,
    pub periodization: PeriodizationConfig,
}

impl StackStudyConfig {
    /// Desk-scale setting: `h = 1/8`, `M ∈ {2, 4, 8}`, `σ = 3`, `p = 6`.
    pub fn reference() -> Self {
        Self {
            spacing: 0.125,
            m_list: vec![2.0, 4.0, 8.0],
            dt: 0.05,
            t_window: [0.1, 1.0],
            sigma: 3.0,
            alpha: 0.2,
            alpha_prime: 0.3,
            p: 6.0,
            theta: 2.0,
            delta: 0.4,
            convention: WickConvention::Shifted,
            periodization: PeriodizationConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        let [t0, t1] = self.t_window;
        if !(self.dt > 0.0 && t0 > 0.0 && t1 >= t0) {
            return Err(Error::Config(format!("need dt > 0 and 0 < t0 <= t1, got {} and {:?}", self.dt, self.t_window)));
        }
        if !(self.p >= 3.0) || !(self.sigma > 2.0) || !(self.alpha >= 0.0) {
            return Err(Error::Config(format!(
                "need p >= 3, sigma > 2, alpha >= 0 (got {}, {}, {})",
                self.p, self.sigma, self.alpha
            )));
        }
        self.periodization.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionStudyConfig {
    pub spacing: f64,
    pub m_list: Vec<f64>,
    pub solver: SolverConfig,
    /// Noise sub-steps per solver step.
    pub substeps: usize,
    pub sigma: f64,
    pub theta: f64,
    pub delta: f64,
    pub convention: WickConvention,
    pub periodization: PeriodizationConfig,
}

impl SolutionStudyConfig {
    pub fn reference() -> Self {
        Self {
            spacing: 0.125,
            m_list: vec![2.0, 4.0, 8.0],
            solver: SolverConfig { energy: false, ..SolverConfig::default() },
            substeps: 1,
            sigma: 3.0,
            theta: 2.0,
            delta: 0.4,
            convention: WickConvention::Shifted,
            periodization: PeriodizationConfig::default(),
        }
    }

    /// Integrability of the norm, `p/9` floored at one.
    pub fn norm_exponent(&self) -> f64 {
        (self.solver.p_diag as f64 / 9.0).max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    /// `1..=3` for the Wick powers, `0` for the remainder `Y`.
    pub n: u32,
    #[serde(rename = "M")]
    pub m: f64,
    /// Seed average of `D(M)`.
    #[serde(rename = "D")]
    pub d: f64,
    pub fit_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCurve {
    pub seed: u64,
    pub n: u32,
    /// `D(M)` along the list of side lengths.
    pub d: Vec<f64>,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackDecay {
    pub m_list: Vec<f64>,
    pub rows: Vec<DecayRow>,
    pub curves: Vec<SeedCurve>,
    /// `σ − 2`, the rate in the plane bound.
    pub reference_exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNormRecord {
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: f64,
    /// `sup_t ‖Y_M(t)‖` in the norm of the study.
    pub sup_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDecay {
    pub m_list: Vec<f64>,
    pub rows: Vec<DecayRow>,
    pub curves: Vec<SeedCurve>,
    pub sup_norms: Vec<SupNormRecord>,
    /// Largest `sup_t ‖Y_M‖` over all runs.
    pub uniform_bound: f64,
    /// Maximum of `sup_t ‖Y_M‖` over seeds on the largest torus divided by the same on the
    /// smallest; a bound common to all `M` keeps this of order one.
    pub growth_ratio: f64,
    pub reference_exponent: f64,
}

fn write_rows<W: Write>(mut w: W, rows: &[DecayRow]) -> Result<()> {
    writeln!(w, "n,M,D,fit_exponent")?;
    for r in rows {
        writeln!(w, "{},{},{:e},{}", r.n, r.m, r.d, r.fit_exponent)?;
    }
    Ok(())
}

fn monotone_count(curves: &[SeedCurve], n: u32) -> (usize, usize) {
    let sel: Vec<_> = curves.iter().filter(|c| c.n == n).collect();
    (sel.iter().filter(|c| c.monotone).count(), sel.len())
}

impl StackDecay {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, &self.rows)
    }

    /// Seeds with strictly decreasing `D_n`, out of all seeds.
    pub fn monotone_seeds(&self, n: u32) -> (usize, usize) {
        monotone_count(&self.curves, n)
    }
}

impl SolutionDecay {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, &self.rows)
    }

    pub fn monotone_seeds(&self) -> (usize, usize) {
        monotone_count(&self.curves, 0)
    }
}

/// `−slope` of the least-squares line through `(ln M, ln D)`; NaN unless every `D > 0`.
pub fn decay_exponent(ms: &[f64], ds: &[f64]) -> f64 {
    if ms.len() < 2 || ms.len() != ds.len() || ds.iter().any(|&d| !(d > 0.0)) {
        return f64::NAN;
    }
    let xs: Vec<f64> = ms.iter().map(|m| m.ln()).collect();
    let ys: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -sxy / sxx
}

/// Tori of the study: the list followed by twice its largest entry, all at spacing `h`.
/// Returns the grids and, for each listed `M`, the index of `2M`.
fn nested_tori(m_list: &[f64], h: f64) -> Result<(Vec<TorusGrid>, Vec<usize>)> {
    if m_list.is_empty() || m_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NestingViolation(format!("side lengths must increase, got {m_list:?}")));
    }
    let mut ms = m_list.to_vec();
    ms.push(2.0 * m_list[m_list.len() - 1]);
    let grids = ms.iter().map(|&m| TorusGrid::with_spacing(m, h)).collect::<Result<Vec<_>>>()?;
    let largest = ms[ms.len() - 1];
    let mut partner = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let ratio = largest / m;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::NestingViolation(format!("M = {m} does not divide {largest}")));
        }
        let j = ms.iter().position(|&x| (x - 2.0 * m).abs() <= 1e-9 * m).ok_or_else(|| {
            Error::NestingViolation(format!("2M = {} is not among the tori {ms:?}", 2.0 * m))
        })?;
        partner.push(j);
    }
    Ok((grids, partner))
}

fn reference_partition(largest: &TorusGrid, theta: f64, delta: f64) -> Result<DyadicPartition> {
    build_partition(largest, PartitionConfig::for_grid(largest, theta, delta))
}

fn periodized(x0: Option<&RealField>, grids: &[TorusGrid], config: &PeriodizationConfig) -> Result<Vec<Option<RealField>>> {
    grids
        .iter()
        .map(|g| x0.map(|x| periodize_initial(x, g.side_length(), config)).transpose())
        .collect()
}

fn check_reference(x0: Option<&RealField>, largest: &TorusGrid) -> Result<()> {
    match x0 {
        Some(x) if x.grid() != largest => Err(Error::IncommensurateGrids(format!(
            "initial datum lives on M = {}, N = {}; the study needs M = {}, N = {}",
            x.grid().side_length(),
            x.grid().points_per_side(),
            largest.side_length(),
            largest.points_per_side()
        ))),
        _ => Ok(()),
    }
}

fn rows_and_curves(
    m_list: &[f64],
    per_seed: &[(u64, Vec<Vec<f64>>)],
    ns: &[u32],
) -> (Vec<DecayRow>, Vec<SeedCurve>) {
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (k, &n) in ns.iter().enumerate() {
        let mean: Vec<f64> = (0..m_list.len())
            .map(|i| per_seed.iter().map(|(_, d)| d[k][i]).sum::<f64>() / per_seed.len() as f64)
            .collect();
        let fit = decay_exponent(m_list, &mean);
        rows.extend(m_list.iter().zip(&mean).map(|(&m, &d)| DecayRow { n, m, d, fit_exponent: fit }));
        for (seed, d) in per_seed {
            let d = d[k].clone();
            let monotone = d.windows(2).all(|w| w[1] < w[0]);
            curves.push(SeedCurve { seed: *seed, n, d, monotone });
        }
    }
    (rows, curves)
}

/// `D_n(M) = sup_{t ∈ window} t^{(n−1)α′} ‖Z^{:n:}_M − Z^{:n:}_{2M}‖` for `n = 1, 2, 3`, with every
/// torus driven by the restriction of one noise realization on the largest torus and norms
/// taken on that torus with the weight `⟨x⟩^{−σ}`.
///
/// `x0`, if given, lives on the largest torus and is periodized for each `M`.
pub fn stack_convergence_study(seeds: &[u64], config: &StackStudyConfig, x0: Option<&RealField>) -> Result<StackDecay> {
    config.validate()?;
    let (grids, partner) = nested_tori(&config.m_list, config.spacing)?;
    let largest = grids[grids.len() - 1];
    check_reference(x0, &largest)?;
    let partition = reference_partition(&largest, config.theta, config.delta)?;
    let x0s = periodized(x0, &grids, &config.periodization)?;
    let [t0, t1] = config.t_window;
    let n_nodes = (t1 / config.dt - 1e-9).ceil() as usize;
    let weight = WeightSpec::Polynomial { sigma: config.sigma };
    let params: Vec<BesovParams> = (1..=3)
        .map(|n| BesovParams::new(-config.alpha, config.p / n as f64, f64::INFINITY, weight))
        .collect();

    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let stream = NoiseStream::new(seed, 0);
        let mut samplers = grids
            .iter()
            .zip(&x0s)
            .map(|(g, x)| HeatSampler::with_noise(CellNoise::windowed(&stream, g, &largest)?, g, x.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let mut d = vec![vec![0.0f64; config.m_list.len()]; 3];
        for k in 1..=n_nodes {
            let t = k as f64 * config.dt;
            for s in samplers.iter_mut() {
                s.advance(config.dt, 1);
            }
            if t < t0 * (1.0 - 1e-9) {
                continue;
            }
            let powers = samplers
                .iter()
                .map(|s| {
                    let g = *s.grid();
                    let (w, v) = s.fields();
                    let shift = config.convention.shift(t, g.side_length())?;
                    let (z1, z2, z3) =
                        wick_powers(&RealField::new(g, w)?, &RealField::new(g, v)?, s.pointwise_variance(), shift)?;
                    Ok([z1, z2, z3])
                })
                .collect::<Result<Vec<_>>>()?;
            for (i, &j) in partner.iter().enumerate() {
                for n in 0..3 {
                    let diff = weighted_difference(&powers[i][n], &powers[j][n], &partition, &params[n])?;
                    let scaled = t.powf(n as f64 * config.alpha_prime) * diff;
                    d[n][i] = d[n][i].max(scaled);
                }
            }
        }
        per_seed.push((seed, d));
    }
    let (rows, curves) = rows_and_curves(&config.m_list, &per_seed, &[1, 2, 3]);
    Ok(StackDecay { m_list: config.m_list.clone(), rows, curves, reference_exponent: config.sigma - 2.0 })
}

/// [`solution_convergence_study_with`] driven by the midpoint Wick stacks of the windowed noise.
pub fn solution_convergence_study(
    seeds: &[u64],
    config: &SolutionStudyConfig,
    x0: Option<&RealField>,
) -> Result<SolutionDecay> {
    let (convention, substeps, dt) = (config.convention, config.substeps, config.solver.dt);
    solution_convergence_study_with(seeds, config, x0, |seed, grid, largest, x0m| {
        let noise = CellNoise::windowed(&NoiseStream::new(seed, 0), grid, largest)?;
        let s = StackStream::with_noise(noise, grid, dt, substeps, convention, x0m)?;
        Ok(Box::new(s) as Box<dyn StackSource>)
    })
}

/// Solves on every torus with the stacks from `source(seed, grid, largest, X_{0;M})` and reports
/// `sup_t ‖Y_M − Y_{2M}‖` in `B̂^{β,σ}_{p/9,∞}` on the largest torus, together with the
/// per-run `sup_t ‖Y_M‖`.
pub fn solution_convergence_study_with<F>(
    seeds: &[u64],
    config: &SolutionStudyConfig,
    x0: Option<&RealField>,
    mut source: F,
) -> Result<SolutionDecay>
where
    F: FnMut(u64, &TorusGrid, &TorusGrid, Option<&RealField>) -> Result<Box<dyn StackSource>>,
{
    config.solver.validate()?;
    config.periodization.validate()?;
    if !(config.sigma > 2.0) {
        return Err(Error::Config(format!("need sigma > 2, got {}", config.sigma)));
    }
    let (grids, partner) = nested_tori(&config.m_list, config.spacing)?;
    let largest = grids[grids.len() - 1];
    check_reference(x0, &largest)?;
    let partition = reference_partition(&largest, config.theta, config.delta)?;
    let x0s = periodized(x0, &grids, &config.periodization)?;
    let params = BesovParams::new(
        config.solver.beta,
        config.norm_exponent(),
        f64::INFINITY,
        WeightSpec::Polynomial { sigma: config.sigma },
    );

    let mut per_seed = Vec::with_capacity(seeds.len());
    let mut sup_norms = Vec::new();
    for &seed in seeds {
        let mut trajectories = Vec::with_capacity(grids.len());
        for (g, x) in grids.iter().zip(&x0s) {
            let mut stack = source(seed, g, &largest, x.as_ref())?;
            // `Y` starts from zero; the datum enters through `V` inside the stack.
            let traj = solve_global(stack.as_mut(), &config.solver)?;
            let mut sup = 0.0f64;
            for y in &traj.y {
                sup = sup.max(besov_norm(&super::tile(y, &largest)?, &partition, &params)?);
            }
            sup_norms.push(SupNormRecord { seed, m: g.side_length(), sup_norm: sup });
            trajectories.push(traj);
        }
        let mut d = vec![0.0f64; config.m_list.len()];
        for (i, &j) in partner.iter().enumerate() {
            let (a, b) = (&trajectories[i], &trajectories[j]);
            for (ya, yb) in a.y.iter().zip(&b.y) {
                d[i] = d[i].max(weighted_difference(ya, yb, &partition, &params)?);
            }
        }
        per_seed.push((seed, vec![d]));
    }
    let (rows, curves) = rows_and_curves(&config.m_list, &per_seed, &[0]);
    let per_m: Vec<f64> = grids
        .iter()
        .map(|g| {
            sup_norms
                .iter()
                .filter(|r| r.m == g.side_length())
                .fold(0.0f64, |m, r| m.max(r.sup_norm))
        })
        .collect();
    let uniform_bound = per_m.iter().copied().fold(0.0, f64::max);
    let growth_ratio = if per_m[0] > 0.0 { per_m[per_m.len() - 1] / per_m[0] } else { 1.0 };
    Ok(SolutionDecay {
        m_list: config.m_list.clone(),
        rows,
        curves,
        sup_norms,
        uniform_bound,
        growth_ratio,
        reference_exponent: config.sigma - 2.0,
    })
}
