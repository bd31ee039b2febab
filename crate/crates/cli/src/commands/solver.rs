use super::{num, CommandResult};
use crate::config::RunConfig;
use crate::output::Artifacts;
use crate::{CliError, Outcome};
use phi4lab::gaussian::{NoiseStream, StackStream};
use phi4lab::grid::TorusGrid;
use phi4lab::solver::{apriori_check, resubstitution_error, solve_global, PicardInit, SolverConfig, Trajectory};
use serde_json::{json, Value};

pub const HEADER: &str = "seed,check,value";

struct Runner<'a> {
    cfg: &'a RunConfig,
    grid: TorusGrid,
    stream: NoiseStream,
}

enum Solved {
    Done(Trajectory),
    Aborted(f64),
}

impl Runner<'_> {
    fn stack(&self, dt: f64, substeps: usize) -> Result<StackStream, CliError> {
        Ok(StackStream::new(&self.stream, &self.grid, dt, substeps, self.cfg.numerics.convention, None)?)
    }

    fn solve(&self, config: &SolverConfig, substeps: usize) -> Result<Solved, CliError> {
        match solve_global(&mut self.stack(config.dt, substeps)?, config) {
            Ok(t) => Ok(Solved::Done(t)),
            Err(phi4lab::Error::Abort { t }) => Ok(Solved::Aborted(t)),
            Err(e) => Err(e.into()),
        }
    }
}

fn residual_sum(t: &Trajectory) -> f64 {
    t.diagnostics[1..].iter().map(|d| d.energy_residual.abs()).sum()
}

pub fn run(cfg: &RunConfig, root_seed: u64, art: &mut Artifacts) -> CommandResult {
    let sec = cfg.verify_solver.as_ref().expect("checked by the caller");
    let grid = cfg.grid().map_err(CliError::Config)?;
    let base = cfg.solver();
    let k = cfg.numerics.substeps;
    let (mut passed, mut aborted) = (true, None::<f64>);
    let mut entries = Vec::new();
    let mut worst_offset = 0.0f64;
    for s in 0..sec.seeds as u64 {
        let run = Runner { cfg, grid, stream: NoiseStream::new(root_seed, s) };
        let mut entry = serde_json::Map::new();
        let mut note = |name: &str, v: f64, art: &mut Artifacts| -> Result<(), CliError> {
            entry.insert(name.to_string(), num(v));
            Ok(art.row(&format!("{s},{name},{v}"))?)
        };
        let coarse_k = if sec.refine { 2 * k } else { k };
        let coarse_cfg = SolverConfig { energy: true, ..base.clone() };
        let coarse = match run.solve(&coarse_cfg, coarse_k)? {
            Solved::Done(t) => t,
            Solved::Aborted(t) => {
                aborted.get_or_insert(t);
                entries.push(json!({ "seed": s, "aborted_at": t }));
                continue;
            }
        };
        let apriori = apriori_check(&coarse, base.p_diag)?;
        worst_offset = worst_offset.max(apriori.bound_offset);
        note("apriori_bound_offset", apriori.bound_offset, art)?;
        let coarse_sum = residual_sum(&coarse);
        note("residual_sum", coarse_sum, art)?;
        drop(coarse);

        if sec.refine {
            let fine_cfg = SolverConfig { dt: base.dt / 2.0, record_stride: 2 * base.record_stride, ..coarse_cfg.clone() };
            match run.solve(&fine_cfg, k)? {
                Solved::Done(fine) => {
                    let ratio = coarse_sum / residual_sum(&fine);
                    note("residual_sum_fine", residual_sum(&fine), art)?;
                    note("residual_ratio", ratio, art)?;
                    passed &= ratio >= sec.min_residual_ratio;
                }
                Solved::Aborted(t) => {
                    aborted.get_or_insert(t);
                }
            }
        }

        let dense = SolverConfig { t_end: sec.resubstitution_t_end, record_stride: 1, energy: false, ..base.clone() };
        if let Solved::Done(traj) = run.solve(&dense, coarse_k)? {
            let err = resubstitution_error(&traj, &mut run.stack(dense.dt, coarse_k)?, &dense)?;
            note("resubstitution_error", err, art)?;
            passed &= err <= sec.max_resubstitution;
        }

        if sec.uniqueness {
            let zero = SolverConfig { init: PicardInit::Zero, energy: false, ..base.clone() };
            let heat = SolverConfig { init: PicardInit::HeatNoise, ..zero.clone() };
            match (run.solve(&zero, k)?, run.solve(&heat, k)?) {
                (Solved::Done(a), Solved::Done(b)) => {
                    let gap = a
                        .y
                        .iter()
                        .zip(&b.y)
                        .map(|(u, v)| (u.values() - v.values()).iter().fold(0.0f64, |m, x| m.max(x.abs())))
                        .fold(0.0f64, f64::max);
                    note("init_disagreement", gap, art)?;
                    passed &= gap <= sec.max_disagreement;
                }
                (Solved::Aborted(t), _) | (_, Solved::Aborted(t)) => {
                    aborted.get_or_insert(t);
                }
            }
        }
        entry.insert("seed".into(), Value::from(s));
        entries.push(Value::Object(entry));
    }
    Ok((
        Outcome { passed: passed && aborted.is_none(), aborted },
        json!({ "seeds": entries, "max_apriori_bound_offset": num(worst_offset) }),
    ))
}
