//! Binary checkpoints.
//!
//! Layout (little-endian): magic `QGX1`, `u32 n`, `f64 l`, `f64 alpha`,
//! `f64 k`, `f64 t`, `u64 step_count`, then `n·n` pairs `(f64 re, f64 im)`
//! in row-major mode order.

use std::fs;
use std::path::Path;

use qg_core::{Complex64, Grid, SimState, SpectralField};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"QGX1";
const HEADER_LEN: usize = 4 + 4 + 8 * 4 + 8;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupted checkpoint: {0}")]
    Corrupted(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub state: SimState,
    pub alpha: f64,
    pub k: f64,
}

pub fn encode(cp: &Checkpoint) -> Vec<u8> {
    let grid = cp.state.theta.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * grid.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    for v in [grid.l(), cp.alpha, cp.k, cp.state.t] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&cp.state.step_count.to_le_bytes());
    for c in cp.state.theta.coeffs() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    buf
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let corrupted = |m: String| CheckpointError::Corrupted(m);
    if bytes.len() < HEADER_LEN {
        return Err(corrupted(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(corrupted("bad magic bytes".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let (l, alpha, k, t) = (f64_at(bytes, 8), f64_at(bytes, 16), f64_at(bytes, 24), f64_at(bytes, 32));
    let step_count = u64::from_le_bytes(bytes[40..48].try_into().unwrap());
    let grid = Grid::new(n, l).map_err(|e| corrupted(e.to_string()))?;
    let expected = HEADER_LEN + 16 * grid.len();
    if bytes.len() != expected {
        return Err(corrupted(format!(
            "expected {expected} bytes for n = {n}, found {}",
            bytes.len()
        )));
    }
    if !t.is_finite() || !alpha.is_finite() || !k.is_finite() {
        return Err(corrupted("non-finite header value".into()));
    }
    let coeffs = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| Complex64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    let theta = SpectralField::from_coeffs(grid, coeffs).map_err(|e| corrupted(e.to_string()))?;
    Ok(Checkpoint {
        state: SimState {
            t,
            theta,
            step_count,
        },
        alpha,
        k,
    })
}

pub fn write_checkpoint(cp: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    fs::write(path, encode(cp))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    decode(&fs::read(path)?)
}
