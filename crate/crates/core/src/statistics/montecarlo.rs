use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::samples::{SampleMeta, SampleRecord, SampleSet};
use crate::error::{invalid, Error, Result};
use crate::propagation::{aperture_transmittances, BeamParams, ChannelPropagator};
use crate::provenance::digest;
use crate::screens::{RingTable, ScreenOptions, SparseScreenSet};
use crate::seed::derive_seed;
use crate::turbulence::{ChannelGeometry, TurbulenceParams};

const CHECKPOINT_FORMAT: &str = "timecorr-checkpoint/1";

/// Everything that determines the transmittance samples of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub turbulence: TurbulenceParams,
    pub geometry: ChannelGeometry,
    pub beam: BeamParams,
    /// Wind shifts, m; strictly increasing from 0.
    pub shifts: Vec<f64>,
    pub n_samples: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub screens: ScreenOptions,
    /// Further receiver apertures evaluated on the same fields, m.
    #[serde(default)]
    pub extra_aperture_radii: Vec<f64>,
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        self.turbulence.validate()?;
        self.geometry.validate()?;
        self.beam.validate()?;
        if self.n_samples == 0 {
            return Err(invalid("n_samples must be at least 1"));
        }
        if self.shifts.first() != Some(&0.0) {
            return Err(invalid("the shift list must start at 0"));
        }
        if self.shifts.windows(2).any(|w| !(w[1] > w[0])) || self.shifts.iter().any(|s| !s.is_finite()) {
            return Err(invalid("shifts must be finite and strictly increasing"));
        }
        if self.extra_aperture_radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(invalid("aperture radii must be finite and non-negative"));
        }
        Ok(())
    }

    /// Aperture radii in output order: the geometry's own first.
    pub fn aperture_radii(&self) -> Vec<f64> {
        let mut r = vec![self.geometry.aperture_radius];
        r.extend(&self.extra_aperture_radii);
        r
    }

    pub fn digest(&self) -> String {
        digest(self)
    }
}

/// Execution options that do not affect the samples.
#[derive(Debug, Clone, Default)]
pub struct RunControl {
    /// JSON-lines file of completed realizations; resumed when present.
    pub checkpoint: Option<PathBuf>,
    /// Stop after this many new realizations.
    pub max_new_realizations: Option<usize>,
    /// Hash of the enclosing configuration, copied into the metadata.
    pub config_hash: Option<String>,
}

/// Outcome of [`run_monte_carlo`].
#[derive(Debug, Clone)]
pub struct MonteCarloRun {
    /// One sample set per aperture radius, in [`MonteCarloConfig::aperture_radii`] order.
    /// Empty when no realization has completed.
    pub sets: Vec<SampleSet>,
    pub completed: usize,
    pub requested: usize,
}

impl MonteCarloRun {
    pub fn is_complete(&self) -> bool {
        self.completed == self.requested
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    config_digest: String,
}

/// One completed realization: `eta[radius][shift]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Realization {
    id: u64,
    seed: u64,
    eta: Vec<Vec<f64>>,
    flagged: bool,
}

fn simulate_one(
    config: &MonteCarloConfig,
    table: &RingTable,
    propagator: &mut ChannelPropagator,
    radii: &[f64],
    id: u64,
) -> Result<Realization> {
    let seed = derive_seed(config.master_seed, id);
    let screens = SparseScreenSet::sample(table, &config.geometry, seed, config.screens.amplitude_law);
    let mut eta = vec![Vec::with_capacity(config.shifts.len()); radii.len()];
    let mut flagged = false;
    for out in propagator.propagate_shifts(&screens, &config.shifts)? {
        flagged |= out.flagged;
        for (col, t) in eta.iter_mut().zip(aperture_transmittances(&out.field, radii)) {
            col.push(t);
        }
    }
    Ok(Realization {
        id,
        seed,
        eta,
        flagged,
    })
}

fn load_checkpoint(path: &PathBuf, config_digest: &str) -> Result<BTreeMap<u64, Realization>> {
    let mut done = BTreeMap::new();
    if !path.exists() {
        let mut f = File::create(path)?;
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.into(),
            config_digest: config_digest.into(),
        };
        writeln!(f, "{}", serde_json::to_string(&header)?)?;
        f.sync_all()?;
        return Ok(done);
    }
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header: CheckpointHeader = match lines.next() {
        Some(line) => serde_json::from_str(&line?)?,
        None => return Err(Error::Parse(format!("checkpoint {} is empty", path.display()))),
    };
    if header.format != CHECKPOINT_FORMAT {
        return Err(Error::Parse(format!("unsupported checkpoint format {}", header.format)));
    }
    if header.config_digest != config_digest {
        return Err(Error::Config(format!(
            "checkpoint {} belongs to a different configuration",
            path.display()
        )));
    }
    for line in lines {
        let line = line?;
        // A run killed mid-write leaves at most one torn final line.
        match serde_json::from_str::<Realization>(&line) {
            Ok(r) => {
                done.insert(r.id, r);
            }
            Err(_) => log::warn!("ignoring a torn checkpoint line"),
        }
    }
    Ok(done)
}

/// Samples `n_samples` atmospheric realizations and records the aperture
/// transmittance at every shift and radius.
///
/// Realization `i` uses the screen seed `derive_seed(master_seed, i)`, so the
/// result does not depend on the thread count, the batch size or on how
/// often the run was interrupted and resumed.
pub fn run_monte_carlo(config: &MonteCarloConfig, control: &RunControl) -> Result<MonteCarloRun> {
    config.validate()?;
    let radii = config.aperture_radii();
    let config_digest = config.digest();
    let mut done = match &control.checkpoint {
        Some(p) => load_checkpoint(p, &config_digest)?,
        None => BTreeMap::new(),
    };
    done.retain(|id, r| {
        *id < config.n_samples as u64
            && r.eta.len() == radii.len()
            && r.eta.iter().all(|c| c.len() == config.shifts.len())
    });

    let mut pending: Vec<u64> = (0..config.n_samples as u64)
        .filter(|id| !done.contains_key(id))
        .collect();
    if let Some(limit) = control.max_new_realizations {
        pending.truncate(limit);
    }

    if !pending.is_empty() {
        let table = RingTable::for_geometry(&config.turbulence, &config.geometry, config.screens.ring_count)?;
        let prototype = ChannelPropagator::new(&config.geometry, &config.beam)?;
        let mut writer = match &control.checkpoint {
            Some(p) => Some(OpenOptions::new().append(true).open(p)?),
            None => None,
        };
        let batch = (4 * rayon::current_num_threads()).max(8);
        for chunk in pending.chunks(batch) {
            let results: Vec<Realization> = chunk
                .par_iter()
                .map_init(
                    || prototype.clone(),
                    |prop, &id| simulate_one(config, &table, prop, &radii, id),
                )
                .collect::<Result<_>>()?;
            if let Some(w) = writer.as_mut() {
                let mut buf = String::new();
                for r in &results {
                    buf.push_str(&serde_json::to_string(r)?);
                    buf.push('\n');
                }
                w.write_all(buf.as_bytes())?;
                w.sync_data()?;
            }
            for r in results {
                done.insert(r.id, r);
            }
            log::info!("{} of {} realizations complete", done.len(), config.n_samples);
        }
    }

    let completed = done.len();
    let mut sets = Vec::new();
    if completed > 0 {
        let flagged = done.values().filter(|r| r.flagged).count();
        let flagged_fraction = flagged as f64 / completed as f64;
        let mut warnings = Vec::new();
        if flagged_fraction > 0.01 {
            warnings.push(format!(
                "{flagged} of {completed} realizations tripped the aliasing guard"
            ));
            log::warn!("{}", warnings[0]);
        }
        for (ri, &radius) in radii.iter().enumerate() {
            let records = done
                .values()
                .map(|r| SampleRecord {
                    realization_id: r.id,
                    seed: r.seed,
                    eta: r.eta[ri].clone(),
                    flagged: r.flagged,
                })
                .collect();
            let mut geometry = config.geometry.clone();
            geometry.aperture_radius = radius;
            let meta = SampleMeta {
                turbulence: Some(config.turbulence.clone()),
                geometry: Some(geometry),
                beam: Some(config.beam.clone()),
                aperture_radius: Some(radius),
                master_seed: Some(config.master_seed),
                code_version: crate::VERSION.to_string(),
                config_hash: Some(control.config_hash.clone().unwrap_or_else(|| config_digest.clone())),
                flagged_fraction,
                warnings: warnings.clone(),
            };
            sets.push(SampleSet::new(config.shifts.clone(), records, meta)?);
        }
    }
    Ok(MonteCarloRun {
        sets,
        completed,
        requested: config.n_samples,
    })
}
