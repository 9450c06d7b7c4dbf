use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::propagation::BeamParams;
use crate::turbulence::{ChannelGeometry, TurbulenceParams};

pub const SAMPLE_CSV_FORMAT: &str = "timecorr-samples-csv/1";
const SAMPLE_BIN_FORMAT: &str = "timecorr-samples-f64le/1";

/// Provenance of a sample set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub turbulence: Option<TurbulenceParams>,
    pub geometry: Option<ChannelGeometry>,
    pub beam: Option<BeamParams>,
    /// Aperture radius these transmittances refer to, m.
    pub aperture_radius: Option<f64>,
    pub master_seed: Option<u64>,
    pub code_version: String,
    pub config_hash: Option<String>,
    /// Fraction of records whose aliasing guard tripped.
    pub flagged_fraction: f64,
    pub warnings: Vec<String>,
}

impl SampleMeta {
    pub fn synthetic() -> Self {
        Self {
            code_version: crate::VERSION.to_string(),
            ..Self::default()
        }
    }
}

/// Transmittances of one atmospheric realization at every shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub realization_id: u64,
    pub seed: u64,
    pub eta: Vec<f64>,
    #[serde(default)]
    pub flagged: bool,
}

/// Monte-Carlo transmittance records on a common, strictly increasing shift
/// list starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    shifts: Vec<f64>,
    records: Vec<SampleRecord>,
    meta: SampleMeta,
}

#[derive(Serialize, Deserialize)]
struct BinarySidecar {
    format: String,
    shifts_m: Vec<f64>,
    realization_ids: Vec<u64>,
    seeds: Vec<u64>,
    flagged: Vec<bool>,
    meta: SampleMeta,
}

impl SampleSet {
    pub fn new(shifts: Vec<f64>, records: Vec<SampleRecord>, meta: SampleMeta) -> Result<Self> {
        if shifts.is_empty() || shifts[0] != 0.0 {
            return Err(invalid("shift list must start at 0"));
        }
        if shifts.windows(2).any(|w| !(w[1] > w[0])) || shifts.iter().any(|s| !s.is_finite()) {
            return Err(invalid("shifts must be finite and strictly increasing"));
        }
        if records.is_empty() {
            return Err(invalid("a sample set needs at least one record"));
        }
        let mut ids = std::collections::HashSet::with_capacity(records.len());
        for r in &records {
            if r.eta.len() != shifts.len() {
                return Err(invalid(format!(
                    "record {} has {} values for {} shifts",
                    r.realization_id,
                    r.eta.len(),
                    shifts.len()
                )));
            }
            if r.eta.iter().any(|e| !(0.0..=1.0).contains(e)) {
                return Err(invalid(format!(
                    "record {} has a transmittance outside [0, 1]",
                    r.realization_id
                )));
            }
            if !ids.insert(r.realization_id) {
                return Err(invalid(format!("duplicate realization id {}", r.realization_id)));
            }
        }
        Ok(Self {
            shifts,
            records,
            meta,
        })
    }

    /// Builds a set from `(η at each shift)` rows with ids `0..n`.
    pub fn from_rows(shifts: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let records = rows
            .into_iter()
            .enumerate()
            .map(|(i, eta)| SampleRecord {
                realization_id: i as u64,
                seed: 0,
                eta,
                flagged: false,
            })
            .collect();
        Self::new(shifts, records, SampleMeta::synthetic())
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn meta(&self) -> &SampleMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut SampleMeta {
        &mut self.meta
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Index of `shift` in the shift list (exact match or within 1e-12 m).
    pub fn shift_index(&self, shift: f64) -> Result<usize> {
        self.shifts
            .iter()
            .position(|s| (s - shift).abs() <= 1e-12)
            .ok_or_else(|| invalid(format!("shift {shift} m is not in the sample shift list")))
    }

    /// Transmittances at shift index `k`, in record order.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.eta[k]).collect()
    }

    /// `(η₀, η_s)` pairs for shift index `k`.
    pub fn pairs(&self, k: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.records.iter().map(move |r| (r.eta[0], r.eta[k]))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_csv_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "# format={SAMPLE_CSV_FORMAT}")?;
        writeln!(w, "# code_version={}", self.meta.code_version)?;
        if let Some(h) = &self.meta.config_hash {
            writeln!(w, "# config_hash={h}")?;
        }
        if let Some(s) = self.meta.master_seed {
            writeln!(w, "# master_seed={s}")?;
        }
        if let Some(r) = self.meta.aperture_radius {
            writeln!(w, "# aperture_radius_m={r}")?;
        }
        let shifts: Vec<String> = self.shifts.iter().map(|s| s.to_string()).collect();
        writeln!(w, "# shifts_m={}", shifts.join(";"))?;
        writeln!(w, "# meta={}", serde_json::to_string(&self.meta)?)?;
        for r in &self.records {
            writeln!(
                w,
                "# record={};{};{}",
                r.realization_id,
                r.seed,
                u8::from(r.flagged)
            )?;
        }
        writeln!(w, "realization_id,shift_m,eta")?;
        for r in &self.records {
            for (s, e) in self.shifts.iter().zip(&r.eta) {
                writeln!(w, "{},{},{}", r.realization_id, s, e)?;
            }
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::read_csv_from(BufReader::new(File::open(path)?))
    }

    pub fn read_csv_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut meta: Option<SampleMeta> = None;
        let mut shifts: Option<Vec<f64>> = None;
        let mut records: Vec<SampleRecord> = Vec::new();
        let mut index = std::collections::HashMap::new();
        let mut header_seen = false;
        let mut filled = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse(format!("line {}: {msg}", lineno + 1));
            if let Some(rest) = line.strip_prefix('#') {
                let Some((key, value)) = rest.trim().split_once('=') else {
                    continue;
                };
                match key {
                    "format" if value != SAMPLE_CSV_FORMAT => {
                        return Err(bad(&format!("unsupported format {value}")));
                    }
                    "shifts_m" => {
                        let v = value
                            .split(';')
                            .map(|t| t.parse::<f64>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|_| bad("bad shift list"))?;
                        shifts = Some(v);
                    }
                    "meta" => meta = Some(serde_json::from_str(value)?),
                    "record" => {
                        let parts: Vec<&str> = value.split(';').collect();
                        if parts.len() != 3 {
                            return Err(bad("record line needs id;seed;flag"));
                        }
                        let id: u64 = parts[0].parse().map_err(|_| bad("bad record id"))?;
                        let seed: u64 = parts[1].parse().map_err(|_| bad("bad record seed"))?;
                        let flagged = parts[2] == "1";
                        let n = shifts.as_ref().ok_or_else(|| bad("record before shifts_m"))?.len();
                        index.insert(id, records.len());
                        records.push(SampleRecord {
                            realization_id: id,
                            seed,
                            eta: vec![f64::NAN; n],
                            flagged,
                        });
                        filled.push(0usize);
                    }
                    _ => {}
                }
                continue;
            }
            if !header_seen {
                if line != "realization_id,shift_m,eta" {
                    return Err(bad("missing column header"));
                }
                header_seen = true;
                continue;
            }
            let shifts = shifts.as_ref().ok_or_else(|| bad("data before shifts_m"))?;
            let mut cols = line.split(',');
            let (Some(id), Some(s), Some(e), None) = (cols.next(), cols.next(), cols.next(), cols.next())
            else {
                return Err(bad("expected three columns"));
            };
            let id: u64 = id.trim().parse().map_err(|_| bad("bad realization id"))?;
            let s: f64 = s.trim().parse().map_err(|_| bad("bad shift"))?;
            let e: f64 = e.trim().parse().map_err(|_| bad("bad transmittance"))?;
            let &ri = index.get(&id).ok_or_else(|| bad("row for undeclared realization"))?;
            let k = shifts
                .iter()
                .position(|&x| x == s)
                .ok_or_else(|| bad("row for unknown shift"))?;
            records[ri].eta[k] = e;
            filled[ri] += 1;
        }
        let shifts = shifts.ok_or_else(|| Error::Parse("missing shifts_m header".into()))?;
        if filled.iter().any(|&f| f != shifts.len()) {
            return Err(Error::Parse("missing shift columns for some records".into()));
        }
        Self::new(shifts, records, meta.unwrap_or_else(SampleMeta::synthetic))
    }

    /// Writes `path` (row-major little-endian f64, records × shifts) and a JSON
    /// sidecar next to it with the extension `json`.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for r in &self.records {
            for e in &r.eta {
                w.write_all(&e.to_le_bytes())?;
            }
        }
        w.flush()?;
        let sidecar = BinarySidecar {
            format: SAMPLE_BIN_FORMAT.to_string(),
            shifts_m: self.shifts.clone(),
            realization_ids: self.records.iter().map(|r| r.realization_id).collect(),
            seeds: self.records.iter().map(|r| r.seed).collect(),
            flagged: self.records.iter().map(|r| r.flagged).collect(),
            meta: self.meta.clone(),
        };
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let sidecar: BinarySidecar =
            serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        if sidecar.format != SAMPLE_BIN_FORMAT {
            return Err(Error::Parse(format!("unsupported format {}", sidecar.format)));
        }
        let n = sidecar.realization_ids.len();
        let k = sidecar.shifts_m.len();
        if sidecar.seeds.len() != n || sidecar.flagged.len() != n {
            return Err(Error::Parse("sidecar arrays disagree in length".into()));
        }
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() != n * k * 8 {
            return Err(Error::Parse(format!(
                "expected {} bytes, found {}",
                n * k * 8,
                bytes.len()
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let records = (0..n)
            .map(|i| SampleRecord {
                realization_id: sidecar.realization_ids[i],
                seed: sidecar.seeds[i],
                eta: values[i * k..(i + 1) * k].to_vec(),
                flagged: sidecar.flagged[i],
            })
            .collect();
        Self::new(sidecar.shifts_m, records, sidecar.meta)
    }
}

pub(crate) fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}
