use super::{num, CommandResult};
use crate::config::RunConfig;
use crate::output::Artifacts;
use crate::{CliError, Outcome};
use phi4lab::gaussian::{
    covariance_exact, empirical_covariance, mean_and_error, CovarianceQuery, HeatSampler, NoiseStream, Period,
};
use phi4lab::grid::TorusGrid;
use serde_json::json;

pub const HEADER: &str = "check,t,x1,x2,mean,std_error,expected,z";

/// Grid index of coordinate `x`, which must be a grid point.
fn index_of(grid: &TorusGrid, x: f64) -> Result<usize, CliError> {
    let h = grid.spacing();
    let u = (x + 0.5 * grid.side_length()) / h;
    let i = u.round();
    if (u - i).abs() > 1e-9 || i < 0.0 || i >= grid.points_per_side() as f64 {
        return Err(CliError::Config(format!("point coordinate {x} is not a grid point")));
    }
    Ok(i as usize)
}

pub fn run(cfg: &RunConfig, seed: u64, art: &mut Artifacts) -> CommandResult {
    let w = cfg.wick.as_ref().expect("checked by the caller");
    let grid = cfg.grid().map_err(CliError::Config)?;
    let m = grid.side_length();
    let mut passed = true;
    let mut entries = Vec::new();
    let mut record = |check: &str, t: f64, x: [f64; 2], mean: f64, se: f64, expected: f64, art: &mut Artifacts| {
        let z = (mean - expected) / se;
        let ok = z.abs() <= w.max_z;
        passed &= ok;
        entries.push(json!({
            "check": check, "t": t, "x": x, "mean": num(mean), "std_error": num(se),
            "expected": num(expected), "z": num(z), "passed": ok,
        }));
        art.row(&format!("{check},{t},{},{},{mean},{se},{expected},{z}", x[0], x[1]))
    };

    // Covariance at lags: one stream family per time, distinct from the centering runs.
    for (k, &t) in w.times.iter().enumerate() {
        let streams: Vec<NoiseStream> =
            (0..w.samples).map(|i| NoiseStream::new(seed, (k * w.samples + i) as u64)).collect();
        let est = empirical_covariance(&streams, &grid, t, &w.lags)?;
        for e in est {
            let exact = covariance_exact(&CovarianceQuery::new(t, t, e.lag, Period::Finite(m)))?;
            record("covariance", t, e.lag, e.mean, e.std_error, exact, art)?;
        }
    }

    // Centering of the Wick square and cube with V = 0.
    let mut points = w.points.clone();
    points.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let idx = points
        .iter()
        .map(|p| Ok((index_of(&grid, p[1])?, index_of(&grid, p[2])?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    if points.first().is_some_and(|p| !(p[0] > 0.0)) {
        return Err(CliError::Config("centering times must be positive".into()));
    }
    let offset = (w.times.len() * w.samples) as u64;
    let mut z2 = vec![Vec::with_capacity(w.samples); points.len()];
    let mut z3 = vec![Vec::with_capacity(w.samples); points.len()];
    for i in 0..w.samples {
        let mut s = HeatSampler::new(&NoiseStream::new(seed, offset + i as u64), &grid, None)?;
        let mut field = None;
        for (k, p) in points.iter().enumerate() {
            if p[0] > s.time() {
                s.advance(p[0] - s.time(), 1);
                field = None;
            }
            let (f, c) = field.get_or_insert_with(|| (s.fields().0, s.pointwise_variance()));
            let x = f[[idx[k].0, idx[k].1]];
            z2[k].push(x * x - *c);
            z3[k].push(x * (x * x - 3.0 * *c));
        }
    }
    for (k, p) in points.iter().enumerate() {
        let (m2, e2) = mean_and_error(&z2[k]);
        let (m3, e3) = mean_and_error(&z3[k]);
        record("wick2", p[0], [p[1], p[2]], m2, e2, 0.0, art)?;
        record("wick3", p[0], [p[1], p[2]], m3, e3, 0.0, art)?;
    }
    Ok((Outcome { passed, aborted: None }, json!({ "checks": entries })))
}
