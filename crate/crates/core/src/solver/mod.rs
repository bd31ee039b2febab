//! The remainder equation `∂_t Y = ΔY + Ψ(Y, Z̲)`: nonlinearity, exponential Euler steps,
//! Picard windows glued into a global solution, and `L^p` energy diagnostics.

mod energy;
mod kernel;

use crate::error::{Error, Result};
use crate::gaussian::{StackStream, StepStack};
use crate::grid::{check_same, real_to_spectral, spectral_to_real, write_snapshot, RealField, TorusGrid};
use energy::{interval_residual, EnergyProbe, NodeEnergy};
use kernel::{picard_window, PaddedStep, Propagator};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

pub use kernel::phi1;

/// Initial guess for the Picard iteration on a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PicardInit {
    /// Sequential exponential Euler sweep through the window.
    #[default]
    Predictor,
    /// `Y ≡ 0` after the initial node.
    Zero,
    /// Heat flow of `Y_init + Z1` from the window start.
    HeatNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub a: f64,
    pub dt: f64,
    pub t_end: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub p_diag: u32,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub beta: f64,
    /// Steps in the first Picard window.
    pub initial_window: usize,
    /// Store `Y`, `X` every this many steps (endpoints always).
    pub record_stride: usize,
    /// Evaluate the energy identity residual on every interval.
    pub energy: bool,
    pub init: PicardInit,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            dt: 1e-3,
            t_end: 2.0,
            picard_tol: 1e-10,
            picard_max_iters: 50,
            p_diag: 6,
            alpha: 0.02,
            alpha_prime: 0.1,
            beta: 1.5,
            initial_window: 64,
            record_stride: 100,
            energy: true,
            init: PicardInit::Predictor,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return bad(format!("dt = {} and T = {} must be positive", self.dt, self.t_end));
        }
        if self.p_diag < 2 || self.p_diag % 2 != 0 {
            return bad(format!("p_diag = {} must be even", self.p_diag));
        }
        if self.initial_window == 0 || self.record_stride == 0 || self.picard_max_iters == 0 {
            return bad("window, stride and iteration cap must be positive".into());
        }
        if !(self.picard_tol > 0.0) || !self.a.is_finite() {
            return bad("picard_tol must be positive and a finite".into());
        }
        self.steps().map(|_| ())
    }

    /// Number of steps covering `[0, T]`.
    pub fn steps(&self) -> Result<usize> {
        let n = (self.t_end / self.dt).round();
        if n < 1.0 || (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(Error::Config(format!("T = {} is not a multiple of dt = {}", self.t_end, self.dt)));
        }
        Ok(n as usize)
    }

    /// Violated regularity bookkeeping conditions; none of them stops a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !(0.0 < self.alpha && self.alpha < self.alpha_prime) {
            w.push(format!("expected 0 < alpha < alpha' (got {}, {})", self.alpha, self.alpha_prime));
        }
        if !(1.0 < self.beta && self.beta < 2.0) {
            w.push(format!("expected 1 < beta < 2 (got {})", self.beta));
        }
        if self.alpha_prime * (self.p_diag as f64 + 2.0) >= 1.0 {
            w.push(format!(
                "alpha'(p+2) = {} is not below 1",
                self.alpha_prime * (self.p_diag as f64 + 2.0)
            ));
        }
        w
    }
}

/// Anything that hands out the stack step by step.
pub trait StackSource {
    fn grid(&self) -> &TorusGrid;
    fn dt(&self) -> f64;
    fn time(&self) -> f64;
    /// `Z1` at the current node.
    fn z1_now(&self) -> Array2<f64>;
    fn next_step(&mut self) -> Result<StepStack>;
}

impl StackSource for StackStream {
    fn grid(&self) -> &TorusGrid {
        StackStream::grid(self)
    }
    fn dt(&self) -> f64 {
        StackStream::dt(self)
    }
    fn time(&self) -> f64 {
        StackStream::time(self)
    }
    fn z1_now(&self) -> Array2<f64> {
        StackStream::z1_now(self)
    }
    fn next_step(&mut self) -> Result<StepStack> {
        self.advance()
    }
}

/// The deterministic stack `Z̲ ≡ 0`.
pub struct ZeroStack {
    grid: TorusGrid,
    dt: f64,
    step: usize,
}

impl ZeroStack {
    pub fn new(grid: &TorusGrid, dt: f64) -> Self {
        Self { grid: *grid, dt, step: 0 }
    }
}

impl StackSource for ZeroStack {
    fn grid(&self) -> &TorusGrid {
        &self.grid
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }
    fn z1_now(&self) -> Array2<f64> {
        let n = self.grid.points_per_side();
        Array2::zeros((n, n))
    }
    fn next_step(&mut self) -> Result<StepStack> {
        let n = self.grid.points_per_side();
        let t = self.time();
        self.step += 1;
        let z = || Array2::zeros((n, n));
        Ok(StepStack { t, dt: self.dt, z1: z(), z2: z(), z3: z(), c_mid: 0.0, shift: 0.0, z1_end: z() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    /// `‖Y_t‖_{L̃^p_M}` with `p = p_diag`.
    pub lp_norm: f64,
    /// Energy identity residual on the interval ending at `t` (0 at `t = 0`, NaN if disabled).
    pub energy_residual: f64,
    pub picard_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub t0: f64,
    pub steps: usize,
    pub sweeps: usize,
    /// Failed attempts with a longer window before this one succeeded.
    pub halvings: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TorusGrid,
    pub dt: f64,
    pub p_diag: u32,
    pub times: Vec<f64>,
    pub y: Vec<RealField>,
    pub x: Vec<RealField>,
    pub diagnostics: Vec<StepRecord>,
    pub windows: Vec<WindowRecord>,
}

impl Trajectory {
    /// Whether every step was stored.
    pub fn is_dense(&self) -> bool {
        self.times.len() == self.diagnostics.len()
    }

    pub fn write_diagnostics_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,lp_norm,energy_residual,picard_iters")?;
        for d in &self.diagnostics {
            writeln!(w, "{},{},{},{}", d.t, d.lp_norm, d.energy_residual, d.picard_iters)?;
        }
        Ok(())
    }

    /// Snapshots `y_#####.fld`, `x_#####.fld` in the grid format.
    pub fn write_snapshots(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (i, (y, x)) in self.y.iter().zip(&self.x).enumerate() {
            write_snapshot(std::io::BufWriter::new(std::fs::File::create(dir.join(format!("y_{i:05}.fld")))?), y)?;
            write_snapshot(std::io::BufWriter::new(std::fs::File::create(dir.join(format!("x_{i:05}.fld")))?), x)?;
        }
        Ok(())
    }
}

fn check_source(stack: &dyn StackSource, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    if (stack.dt() - config.dt).abs() > 1e-12 * config.dt {
        return Err(Error::Config(format!("stack dt {} differs from solver dt {}", stack.dt(), config.dt)));
    }
    if stack.time() != 0.0 {
        return Err(Error::Config("stack must start at t = 0".into()));
    }
    Ok(())
}

/// `Ψ(Y, Z̲) = −Y³ − 3Y²Z1 − 3YZ2 − Z3 + a(Y + Z1)`, products computed on the `2N` grid.
pub fn psi(y: &RealField, z1: &RealField, z2: &RealField, z3: &RealField, a: f64) -> Result<RealField> {
    for z in [z1, z2, z3] {
        check_same(y.grid(), z.grid())?;
    }
    let prop = Propagator::new(y.grid(), a, 1.0);
    let step = frozen_step(z1, z2, z3);
    let out = prop.psi(&real_to_spectral(y.values().view()), &prop.pad_step(step));
    Ok(RealField::from_raw(*y.grid(), spectral_to_real(out.view())))
}

fn frozen_step(z1: &RealField, z2: &RealField, z3: &RealField) -> StepStack {
    StepStack {
        t: 0.0,
        dt: 0.0,
        z1: z1.values().clone(),
        z2: z2.values().clone(),
        z3: z3.values().clone(),
        c_mid: 0.0,
        shift: 0.0,
        z1_end: z1.values().clone(),
    }
}

/// One exponential Euler step of length `stack.dt` with the midpoint stack of that step.
pub fn step_mild(y: &RealField, stack: &StepStack, config: &SolverConfig) -> Result<RealField> {
    if stack.z1.dim() != y.values().dim() {
        return Err(Error::GridMismatch);
    }
    let prop = Propagator::new(y.grid(), config.a, stack.dt);
    let yh = real_to_spectral(y.values().view());
    let next = prop.advance(&yh, &prop.psi(&yh, &prop.pad_step(clone_step(stack))));
    Ok(RealField::from_raw(*y.grid(), spectral_to_real(next.view())))
}

fn clone_step(s: &StepStack) -> StepStack {
    StepStack {
        t: s.t,
        dt: s.dt,
        z1: s.z1.clone(),
        z2: s.z2.clone(),
        z3: s.z3.clone(),
        c_mid: s.c_mid,
        shift: s.shift,
        z1_end: s.z1_end.clone(),
    }
}

#[derive(Debug, Clone)]
pub struct LocalSolution {
    /// `Y` at the window nodes, the initial value first.
    pub y: Vec<RealField>,
    pub iterations: usize,
    /// Sup-norm bound of successive iterate differences.
    pub differences: Vec<f64>,
}

/// Fixed-point iteration of the discrete mild map on the window covered by `window`.
pub fn picard_local(window: &[StepStack], y_init: &RealField, config: &SolverConfig) -> Result<LocalSolution> {
    let g = *y_init.grid();
    let dt = window.first().map_or(config.dt, |s| s.dt);
    let prop = Propagator::new(&g, config.a, dt);
    let steps: Vec<PaddedStep> = window.iter().map(|s| prop.pad_step(clone_step(s))).collect();
    let y0 = real_to_spectral(y_init.values().view());
    let sol = picard_window(&prop, &steps, &y0, config.init, config.picard_tol, config.picard_max_iters)?;
    Ok(LocalSolution {
        y: sol.y.iter().map(|c| RealField::from_raw(g, spectral_to_real(c.view()))).collect(),
        iterations: sol.sweeps,
        differences: sol.differences,
    })
}

/// Solves on `[0, T]` from `Y(0) = 0`.
pub fn solve_global(stack: &mut dyn StackSource, config: &SolverConfig) -> Result<Trajectory> {
    let n = stack.grid().points_per_side();
    run(stack, config, Array2::zeros((n, n)))
}

/// Solves on `[0, T]` from a given `Y(0)`.
pub fn solve_global_from(stack: &mut dyn StackSource, config: &SolverConfig, y0: &RealField) -> Result<Trajectory> {
    check_same(y0.grid(), stack.grid())?;
    run(stack, config, real_to_spectral(y0.values().view()))
}

fn run(stack: &mut dyn StackSource, config: &SolverConfig, y0: Array2<Complex64>) -> Result<Trajectory> {
    check_source(stack, config)?;
    let n_steps = config.steps()?;
    let grid = *stack.grid();
    let dt = config.dt;
    let prop = Propagator::new(&grid, config.a, dt);
    let probe = EnergyProbe::new(&grid, config.p_diag);
    let mut traj = Trajectory {
        grid,
        dt,
        p_diag: config.p_diag,
        times: vec![],
        y: vec![],
        x: vec![],
        diagnostics: vec![],
        windows: vec![],
    };
    let record = |traj: &mut Trajectory, t: f64, y: &Array2<Complex64>, z1: &Array2<f64>| {
        let yr = spectral_to_real(y.view());
        traj.times.push(t);
        traj.x.push(RealField::from_raw(grid, &yr + z1));
        traj.y.push(RealField::from_raw(grid, yr));
    };
    let (mut prev, _) = probe.nodes(&y0, None, config.energy);
    traj.diagnostics.push(StepRecord { t: 0.0, lp_norm: probe.norm(&prev), energy_residual: 0.0, picard_iters: 0 });
    record(&mut traj, 0.0, &y0, &stack.z1_now());

    let mut buf: VecDeque<PaddedStep> = VecDeque::new();
    let mut y = y0;
    let (mut done, mut w, mut halvings) = (0usize, config.initial_window, 0usize);
    while done < n_steps {
        let w_eff = w.min(n_steps - done);
        while buf.len() < w_eff {
            let a = stack.next_step()?;
            let b = if done + buf.len() + 1 < n_steps { Some(stack.next_step()?) } else { None };
            let (pa, pb) = prop.pad_steps(a, b);
            buf.push_back(pa);
            buf.extend(pb);
        }
        let steps = &buf.make_contiguous()[..w_eff];
        let sol = match picard_window(&prop, steps, &y, config.init, config.picard_tol, config.picard_max_iters) {
            Ok(s) => s,
            Err(Error::PicardDiverged { .. }) => {
                if w == 1 {
                    return Err(Error::Abort { t: done as f64 * dt });
                }
                w /= 2;
                halvings += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let nodes = window_nodes(&probe, &sol.y[1..], config.energy);
        for (j, node) in nodes.into_iter().enumerate() {
            let step = done + j + 1;
            let t = step as f64 * dt;
            let residual = if config.energy {
                interval_residual(&probe, Some(&probe.lift(&sol.psi[j])), &prev, &node, dt)
            } else {
                f64::NAN
            };
            traj.diagnostics.push(StepRecord {
                t,
                lp_norm: probe.norm(&node),
                energy_residual: residual,
                picard_iters: sol.sweeps,
            });
            if step % config.record_stride == 0 || step == n_steps {
                record(&mut traj, t, &sol.y[j + 1], &steps[j].z1_end);
            }
            prev = node;
        }
        traj.windows.push(WindowRecord { t0: done as f64 * dt, steps: w_eff, sweeps: sol.sweeps, halvings });
        y = sol.y[w_eff].clone();
        buf.drain(..w_eff);
        done += w_eff;
        w = (2 * w).min(config.initial_window);
        halvings = 0;
    }
    Ok(traj)
}

fn window_nodes(probe: &EnergyProbe, ys: &[Array2<Complex64>], full: bool) -> Vec<NodeEnergy> {
    let mut out = Vec::with_capacity(ys.len());
    for pair in ys.chunks(2) {
        let (a, b) = probe.nodes(&pair[0], pair.get(1), full);
        out.push(a);
        out.extend(b);
    }
    out
}

fn dense_spectra(traj: &Trajectory) -> Result<Vec<Array2<Complex64>>> {
    if !traj.is_dense() {
        return Err(Error::Config("trajectory must store every step (record_stride = 1)".into()));
    }
    Ok(traj.y.iter().map(|f| real_to_spectral(f.values().view())).collect())
}

/// Per-interval residuals of the `L^p` energy identity, recomputed from a stored trajectory
/// and a fresh copy of its stack. `include_forcing = false` drops the `Ψ` term.
pub fn energy_report(
    traj: &Trajectory,
    stack: &mut dyn StackSource,
    config: &SolverConfig,
    p: u32,
    include_forcing: bool,
) -> Result<Vec<f64>> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::Config(format!("p = {p} must be even")));
    }
    check_source(stack, config)?;
    let ys = dense_spectra(traj)?;
    let prop = Propagator::new(&traj.grid, config.a, config.dt);
    let probe = EnergyProbe::new(&traj.grid, p);
    let nodes = window_nodes(&probe, &ys, true);
    let mut out = Vec::with_capacity(ys.len() - 1);
    for j in 0..ys.len() - 1 {
        let step = prop.pad_step(stack.next_step()?);
        let psi_l = include_forcing.then(|| probe.lift(&prop.psi(&ys[j], &step)));
        out.push(interval_residual(&probe, psi_l.as_ref(), &nodes[j], &nodes[j + 1], config.dt));
    }
    Ok(out)
}

/// Largest sup-norm mismatch between stored `Y_{n+1}` and the mild map applied to `Y_n`.
pub fn resubstitution_error(traj: &Trajectory, stack: &mut dyn StackSource, config: &SolverConfig) -> Result<f64> {
    check_source(stack, config)?;
    let ys = dense_spectra(traj)?;
    let prop = Propagator::new(&traj.grid, config.a, config.dt);
    let mut worst = 0.0f64;
    for j in 0..ys.len() - 1 {
        let step = prop.pad_step(stack.next_step()?);
        let next = spectral_to_real(prop.advance(&ys[j], &prop.psi(&ys[j], &step)).view());
        let err = (&next - traj.y[j + 1].values()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(err);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriReport {
    pub p: u32,
    pub initial_norm: f64,
    pub sup_norm: f64,
    /// `sup_t ‖Y_t‖ − ‖Y_0‖`.
    pub bound_offset: f64,
}

/// `sup_t ‖Y_t‖_{L̃^p_M} − ‖Y_0‖_{L̃^p_M}`, from the per-step diagnostics when `p` matches
/// the diagnostic exponent and from the stored snapshots otherwise.
pub fn apriori_check(traj: &Trajectory, p: u32) -> Result<AprioriReport> {
    let norms: Vec<f64> = if p == traj.p_diag {
        traj.diagnostics.iter().map(|d| d.lp_norm).collect()
    } else {
        if p < 2 || p % 2 != 0 {
            return Err(Error::Config(format!("p = {p} must be even")));
        }
        let probe = EnergyProbe::new(&traj.grid, p);
        traj.y
            .iter()
            .map(|f| probe.norm(&probe.nodes(&real_to_spectral(f.values().view()), None, false).0))
            .collect()
    };
    let initial = norms.first().copied().unwrap_or(0.0);
    let sup = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(AprioriReport { p, initial_norm: initial, sup_norm: sup, bound_offset: sup - initial })
}

/// Exact `‖f‖_{L̃^p_M}` of the trigonometric interpolant, `p` even.
pub fn periodic_lp_norm(f: &RealField, p: u32) -> Result<f64> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::Config(format!("p = {p} must be even")));
    }
    let probe = EnergyProbe::new(f.grid(), p);
    Ok(probe.norm(&probe.nodes(&real_to_spectral(f.values().view()), None, false).0))
}
