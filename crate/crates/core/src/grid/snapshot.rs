//! Field snapshots on disk.
//!
//! A snapshot is two files sharing a stem: `<stem>.bin` holds little-endian
//! `f64` samples, row-major over `(x_1, .., x_d, y)`, the `u` block followed by
//! the `v` block; `<stem>.json` is the header with `d, L, nx, ny, t`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FieldState, TorusWaveguideGrid};
use crate::error::{Error, Result};

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format_version: u32,
    pub d: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub nx: usize,
    pub ny: usize,
    pub t: f64,
}

impl SnapshotHeader {
    pub fn grid(&self) -> Result<TorusWaveguideGrid> {
        TorusWaveguideGrid::new(self.d, self.half_width, self.nx, self.ny)
    }
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Strips a trailing `.bin` or `.json` so either file of a pair can be passed.
pub fn snapshot_stem(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

pub fn encode_samples(state: &FieldState) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(16 * state.u.len());
    for x in state.u.iter().chain(&state.v) {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    bytes
}

/// Writes `<stem>.bin` and `<stem>.json`.
pub fn write_snapshot(stem: &Path, grid: &TorusWaveguideGrid, state: &FieldState) -> Result<()> {
    grid.check_state(state)?;
    let header = SnapshotHeader {
        format_version: SNAPSHOT_FORMAT_VERSION,
        d: grid.dim(),
        half_width: grid.half_width(),
        nx: grid.nx(),
        ny: grid.ny(),
        t: state.t,
    };
    fs::write(with_ext(stem, "bin"), encode_samples(state))?;
    fs::write(with_ext(stem, "json"), serde_json::to_string_pretty(&header)? + "\n")?;
    Ok(())
}

/// Reads a snapshot pair, returning the grid rebuilt from the header.
pub fn read_snapshot(path: &Path) -> Result<(TorusWaveguideGrid, FieldState)> {
    let stem = snapshot_stem(path);
    let header: SnapshotHeader = serde_json::from_str(&fs::read_to_string(with_ext(&stem, "json"))?)?;
    if header.format_version != SNAPSHOT_FORMAT_VERSION {
        return Err(Error::Snapshot(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    let grid = header.grid()?;
    let bytes = fs::read(with_ext(&stem, "bin"))?;
    let n = grid.len();
    if bytes.len() != 16 * n {
        return Err(Error::Snapshot(format!(
            "expected {} bytes for {} samples, found {}",
            16 * n,
            2 * n,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let (u, v) = values.split_at(n);
    let state = FieldState::new(&grid, u.to_vec(), v.to_vec(), header.t)?;
    Ok((grid, state))
}
