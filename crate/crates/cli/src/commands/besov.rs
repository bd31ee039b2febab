use super::{num, CommandResult};
use crate::config::RunConfig;
use crate::output::Artifacts;
use crate::{CliError, Outcome};
use phi4lab::besov::{build_partition, verify_inequality, InequalityKind};
use serde_json::json;

pub const HEADER: &str = "kind,trials,max_ratio,witness_seed";

/// Largest tolerated deviation of the partition of unity.
const UNITY_TOLERANCE: f64 = 1e-10;

pub fn run(cfg: &RunConfig, seed: u64, art: &mut Artifacts) -> CommandResult {
    let b = cfg.besov.as_ref().expect("checked by the caller");
    let grid = cfg.grid().map_err(CliError::Config)?;
    let partition = build_partition(&grid, cfg.partition(&grid))?;
    let kinds: Vec<InequalityKind> = match &b.kinds {
        Some(names) => names.iter().map(|n| n.parse()).collect::<Result<_, _>>().map_err(|e: phi4lab::Error| CliError::Config(e.to_string()))?,
        None => InequalityKind::ALL.to_vec(),
    };
    let vc = cfg.verify(b, seed);
    let unity = partition.unity_deviation();
    let mut passed = unity <= UNITY_TOLERANCE;
    let mut entries = Vec::new();
    for kind in kinds {
        let base = verify_inequality(kind, b.trials, &partition, &vc)?;
        let doubled = verify_inequality(kind, 2 * b.trials, &partition, &vc)?;
        for r in [&base, &doubled] {
            art.row(&format!("{},{},{},{}", kind, r.trials, r.max_ratio, r.witness_seed))?;
        }
        let stability = doubled.max_ratio / base.max_ratio;
        let ok = base.max_ratio.is_finite() && doubled.max_ratio.is_finite() && base.max_ratio > 0.0 && stability < 2.0;
        passed &= ok;
        entries.push(json!({
            "kind": kind.name(),
            "trials": base.trials,
            "max_ratio": num(base.max_ratio),
            "max_ratio_doubled": num(doubled.max_ratio),
            "stability": num(stability),
            "witness_seed": base.witness_seed,
            "setting": base.setting,
            "plane_claim_ok": base.plane_claim_ok,
            "passed": ok,
        }));
    }
    Ok((
        Outcome { passed, aborted: None },
        json!({ "partition_unity_deviation": num(unity), "inequalities": entries }),
    ))
}
