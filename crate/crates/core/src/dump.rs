//! Binary dumps of screens and fields: row-major little-endian `f64` with a
//! JSON sidecar of the same stem.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::propagation::ComplexField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpSidecar {
    pub format: String,
    /// `"phase"` (one value per cell, rad) or `"field"` (re, im per cell, m⁻¹).
    pub kind: String,
    pub grid_n: usize,
    pub grid_step: f64,
    pub seed: Option<u64>,
    pub shift: Option<f64>,
    pub z: Option<f64>,
}

const DUMP_FORMAT: &str = "timecorr-dump-f64le/1";

fn write_values(path: &Path, values: impl Iterator<Item = f64>, sidecar: &DumpSidecar) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(sidecar)?)?;
    Ok(())
}

/// Writes a phase screen indexed `[y][x]`.
pub fn write_screen(path: &Path, phase: &Array2<f64>, grid: Grid, seed: u64, shift: f64) -> Result<()> {
    if phase.dim() != (grid.n, grid.n) {
        return Err(invalid("screen shape does not match the grid"));
    }
    let sidecar = DumpSidecar {
        format: DUMP_FORMAT.into(),
        kind: "phase".into(),
        grid_n: grid.n,
        grid_step: grid.step,
        seed: Some(seed),
        shift: Some(shift),
        z: None,
    };
    write_values(path, phase.iter().copied(), &sidecar)
}

/// Writes a complex field as interleaved `(re, im)` pairs.
pub fn write_field(path: &Path, field: &ComplexField, shift: Option<f64>) -> Result<()> {
    let grid = field.grid();
    let sidecar = DumpSidecar {
        format: DUMP_FORMAT.into(),
        kind: "field".into(),
        grid_n: grid.n,
        grid_step: grid.step,
        seed: None,
        shift,
        z: Some(field.z()),
    };
    write_values(path, field.values().iter().flat_map(|c| [c.re, c.im]), &sidecar)
}

/// Reads a dump back as its sidecar and raw values.
pub fn read_dump(path: &Path) -> Result<(DumpSidecar, Vec<f64>)> {
    let sidecar: DumpSidecar = serde_json::from_str(&std::fs::read_to_string(path.with_extension("json"))?)?;
    if sidecar.format != DUMP_FORMAT {
        return Err(Error::Parse(format!("unsupported dump format {}", sidecar.format)));
    }
    let bytes = std::fs::read(path)?;
    let per_cell = if sidecar.kind == "field" { 2 } else { 1 };
    if bytes.len() != sidecar.grid_n * sidecar.grid_n * per_cell * 8 {
        return Err(Error::Parse("dump size does not match its sidecar".into()));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((sidecar, values))
}
