use super::{num, CommandResult};
use crate::config::RunConfig;
use crate::output::Artifacts;
use crate::{CliError, Outcome};
use phi4lab::gaussian::{NoiseStream, StackStream};
use phi4lab::solver::{apriori_check, solve_global};
use serde_json::json;

pub const HEADER: &str = "realization,t,lp_norm,energy_residual,picard_iters";

pub fn run(cfg: &RunConfig, seed: u64, realizations: usize, art: &mut Artifacts) -> CommandResult {
    let grid = cfg.grid().map_err(CliError::Config)?;
    let solver = cfg.solver();
    let mut entries = Vec::with_capacity(realizations);
    let (mut passed, mut aborted) = (true, None);
    for r in 0..realizations {
        let stream = NoiseStream::new(seed, r as u64);
        let mut stack =
            StackStream::new(&stream, &grid, solver.dt, cfg.numerics.substeps, cfg.numerics.convention, None)?;
        let traj = match solve_global(&mut stack, &solver) {
            Ok(t) => t,
            Err(phi4lab::Error::Abort { t }) => {
                aborted.get_or_insert(t);
                passed = false;
                entries.push(json!({ "realization": r, "completed": false, "abort_time": t }));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        for d in &traj.diagnostics {
            art.row(&format!("{r},{},{},{},{}", d.t, d.lp_norm, d.energy_residual, d.picard_iters))?;
        }
        traj.write_snapshots(&art.snapshots().join(format!("r{r:04}")))?;
        let apriori = apriori_check(&traj, solver.p_diag)?;
        let residuals: Vec<f64> = traj.diagnostics[1..].iter().map(|d| d.energy_residual.abs()).collect();
        let finite = traj.diagnostics.iter().all(|d| d.lp_norm.is_finite());
        passed &= finite;
        entries.push(json!({
            "realization": r,
            "completed": true,
            "finite": finite,
            "sup_lp_norm": num(apriori.sup_norm),
            "apriori_bound_offset": num(apriori.bound_offset),
            "max_abs_energy_residual": num(residuals.iter().copied().fold(0.0, f64::max)),
            "sum_abs_energy_residual": num(residuals.iter().sum()),
            "windows": traj.windows.len(),
            "halvings": traj.windows.iter().map(|w| w.halvings).sum::<usize>(),
            "max_sweeps": traj.windows.iter().map(|w| w.sweeps).max().unwrap_or(0),
        }));
    }
    Ok((Outcome { passed, aborted }, json!({ "realizations": entries })))
}
