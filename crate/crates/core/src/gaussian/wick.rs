//! Wick powers of the shifted Gaussian field and stored Wick stacks.

use super::noise::NoiseStream;
use super::renorm::{grid_wick_variance, renorm_shift_torus};
use super::sampler::{check_times, HeatSampler};
use crate::error::{Error, Result};
use crate::grid::{check_same, read_snapshot, write_snapshot, RealField, TorusGrid};
use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

/// Which constant is subtracted on top of the grid variance.
///
/// `Centered` gives the mean-zero powers `𝖹^{:n:}`; `Shifted` additionally subtracts
/// `𝔠_M(t)` as in the definition of the stack driving the remainder equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WickConvention {
    Centered,
    #[default]
    Shifted,
}

impl WickConvention {
    pub fn shift(&self, t: f64, side_length: f64) -> Result<f64> {
        match self {
            Self::Centered => Ok(0.0),
            Self::Shifted => renorm_shift_torus(t, side_length),
        }
    }
}

/// With `X = W + V` and `C = c + shift`: `(X, X² − C, X³ − 3CX)`, i.e.
/// `Z2 = (W² − C) + 2WV + V²` and `Z3 = (W³ − 3CW) + 3(W² − C)V + 3WV² + V³`.
pub fn wick_powers(
    w: &RealField,
    v: &RealField,
    c: f64,
    shift: f64,
) -> Result<(RealField, RealField, RealField)> {
    check_same(w.grid(), v.grid())?;
    let g = *w.grid();
    let (z1, z2, z3) = wick_arrays(w.values().view(), Some(v.values().view()), c + shift);
    Ok((
        RealField::from_raw(g, z1),
        RealField::from_raw(g, z2),
        RealField::from_raw(g, z3),
    ))
}

pub(crate) fn wick_arrays(
    w: ArrayView2<f64>,
    v: Option<ArrayView2<f64>>,
    big_c: f64,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let z1 = match v {
        Some(v) => &w + &v,
        None => w.to_owned(),
    };
    let mut z2 = Array2::zeros(z1.raw_dim());
    let mut z3 = Array2::zeros(z1.raw_dim());
    Zip::from(&z1).and(&mut z2).and(&mut z3).for_each(|&x, a, b| {
        let x2 = x * x;
        *a = x2 - big_c;
        *b = x * (x2 - 3.0 * big_c);
    });
    (z1, z2, z3)
}

/// Time-indexed `(Z, Z^{:2:}, Z^{:3:})` with the harmonic part `V` and the constants used.
#[derive(Debug, Clone)]
pub struct WickStack {
    pub grid: TorusGrid,
    pub stream: NoiseStream,
    pub convention: WickConvention,
    pub times: Vec<f64>,
    pub z: Vec<RealField>,
    pub z2: Vec<RealField>,
    pub z3: Vec<RealField>,
    pub v: Vec<RealField>,
    pub c_grid: Vec<f64>,
    pub shift: Vec<f64>,
}

pub fn build_wick_stack(
    stream: &NoiseStream,
    grid: &TorusGrid,
    times: &[f64],
    x0: Option<&RealField>,
    convention: WickConvention,
) -> Result<WickStack> {
    check_times(times)?;
    let mut s = HeatSampler::new(stream, grid, x0)?;
    let mut out = WickStack {
        grid: *grid,
        stream: *stream,
        convention,
        times: times.to_vec(),
        z: vec![],
        z2: vec![],
        z3: vec![],
        v: vec![],
        c_grid: vec![],
        shift: vec![],
    };
    for &t in times {
        if t > s.time() {
            s.advance(t - s.time(), 1);
        }
        let shift = if convention == WickConvention::Centered {
            0.0
        } else if t > 0.0 {
            convention.shift(t, grid.side_length())?
        } else {
            return Err(Error::TimeOutOfRange(t));
        };
        let c = grid_wick_variance(grid, t);
        let (w, v) = s.fields();
        let (z1, z2, z3) = wick_arrays(w.view(), Some(v.view()), c + shift);
        out.z.push(RealField::from_raw(*grid, z1));
        out.z2.push(RealField::from_raw(*grid, z2));
        out.z3.push(RealField::from_raw(*grid, z3));
        out.v.push(RealField::from_raw(*grid, v));
        out.c_grid.push(c);
        out.shift.push(shift);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    times: Vec<f64>,
    c_grid: Vec<f64>,
    shift: Vec<f64>,
    seed: NoiseStream,
    convention: WickConvention,
    side_length: f64,
    points_per_side: usize,
}

impl WickStack {
    /// Writes one snapshot per field and time plus `stack.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (i, fields) in self.all_fields().enumerate() {
            for (name, f) in fields {
                let mut w = BufWriter::new(File::create(dir.join(format!("{name}_{i:05}.fld")))?);
                write_snapshot(&mut w, f)?;
            }
        }
        let side = Sidecar {
            times: self.times.clone(),
            c_grid: self.c_grid.clone(),
            shift: self.shift.clone(),
            seed: self.stream,
            convention: self.convention,
            side_length: self.grid.side_length(),
            points_per_side: self.grid.points_per_side(),
        };
        let json = serde_json::to_string_pretty(&side).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(dir.join("stack.json"), json)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join("stack.json"))?;
        let side: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        let grid = TorusGrid::new(side.side_length, side.points_per_side)?;
        let load = |name: &str, i: usize| -> Result<RealField> {
            let f = read_snapshot(BufReader::new(File::open(dir.join(format!("{name}_{i:05}.fld")))?))?;
            check_same(f.grid(), &grid)?;
            Ok(f)
        };
        let mut out = WickStack {
            grid,
            stream: side.seed,
            convention: side.convention,
            times: side.times,
            z: vec![],
            z2: vec![],
            z3: vec![],
            v: vec![],
            c_grid: side.c_grid,
            shift: side.shift,
        };
        for i in 0..out.times.len() {
            out.z.push(load("z", i)?);
            out.z2.push(load("z2", i)?);
            out.z3.push(load("z3", i)?);
            out.v.push(load("v", i)?);
        }
        Ok(out)
    }

    fn all_fields(&self) -> impl Iterator<Item = [(&'static str, &RealField); 4]> {
        (0..self.times.len())
            .map(move |i| [("z", &self.z[i]), ("z2", &self.z2[i]), ("z3", &self.z3[i]), ("v", &self.v[i])])
    }
}
