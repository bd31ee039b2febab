use super::{num, CommandResult};
use crate::config::RunConfig;
use crate::output::Artifacts;
use crate::Outcome;
use phi4lab::plane::{solution_convergence_study, stack_convergence_study};
use serde_json::json;
use std::io::BufWriter;

pub const HEADER: &str = "n,M,D,fit_exponent";

pub fn run(cfg: &RunConfig, root_seed: u64, art: &mut Artifacts) -> CommandResult {
    let c = cfg.converge.as_ref().expect("checked by the caller");
    let seeds: Vec<u64> = (0..c.seeds as u64).map(|i| root_seed + i).collect();
    let need = (c.min_monotone_fraction * seeds.len() as f64 - 1e-9).ceil() as usize;

    let stack = stack_convergence_study(&seeds, &cfg.stack_study(c), None)?;
    for r in &stack.rows {
        art.row(&format!("{},{},{:e},{}", r.n, r.m, r.d, r.fit_exponent))?;
    }
    let mut passed = true;
    let mut monotone = Vec::new();
    for n in 1..=3 {
        let (ok, total) = stack.monotone_seeds(n);
        passed &= ok >= need;
        monotone.push(json!({ "n": n, "monotone_seeds": ok, "seeds": total }));
    }
    let mut body = json!({
        "seeds": seeds,
        "required_monotone_seeds": need,
        "stack": stack,
        "stack_monotone": monotone,
    });

    if c.solutions {
        let sol = solution_convergence_study(&seeds, &cfg.solution_study(c), None)?;
        sol.write_csv(BufWriter::new(std::fs::File::create(art.dir().join("solution_decay.csv"))?))?;
        let (ok, total) = sol.monotone_seeds();
        passed &= ok >= need && sol.growth_ratio <= c.max_growth_ratio;
        body["solution"] = serde_json::to_value(&sol).expect("serializable");
        body["solution_monotone"] = json!({ "monotone_seeds": ok, "seeds": total });
        body["solution_growth_ratio"] = num(sol.growth_ratio);
    }
    Ok((Outcome { passed, aborted: None }, body))
}
