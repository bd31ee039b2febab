//! Binary field snapshots: `PHI4FLD1`, `u32` N, `f64` M, then `N*N` `f64`
//! values row-major, all little-endian.

use super::{RealField, TorusGrid};
use crate::error::{Error, Result};
use ndarray::Array2;
use std::io::{Read, Write};

const MAGIC: &[u8; 8] = b"PHI4FLD1";

pub fn write_snapshot<W: Write>(mut w: W, f: &RealField) -> Result<()> {
    let g = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(g.points_per_side() as u32).to_le_bytes())?;
    w.write_all(&g.side_length().to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * f.values().len());
    for v in f.values().iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<RealField> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let m = f64::from_le_bytes(b8);
    let grid = TorusGrid::new(m, n)?;
    let mut raw = vec![0u8; 8 * n * n];
    r.read_exact(&mut raw)?;
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    RealField::new(grid, Array2::from_shape_vec((n, n), values).unwrap())
}
