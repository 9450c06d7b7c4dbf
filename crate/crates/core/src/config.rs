//! Run configuration: simulation parameters plus optional analysis blocks.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cv::DeterministicLosses;
use crate::dv::{ChshAngles, StoredArm};
use crate::error::{Error, Result};
use crate::nonclassicality::ScanOptions;
use crate::propagation::BeamParams;
use crate::provenance::digest;
use crate::screens::ScreenOptions;
use crate::statistics::{MonteCarloConfig, DEFAULT_HISTOGRAM_BINS};
use crate::turbulence::{ChannelGeometry, TurbulenceParams};

/// Complete description of a simulation and its analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub description: Option<String>,
    pub turbulence: TurbulenceParams,
    pub geometry: ChannelGeometry,
    pub beam: BeamParams,
    /// Wind shifts, m.
    pub shifts: Vec<f64>,
    pub n_samples: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub screens: ScreenOptions,
    /// Further aperture radii evaluated on the same fields, m.
    #[serde(default)]
    pub extra_aperture_radii: Vec<f64>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    #[serde(default)]
    pub conditional_pdt: Option<ConditionalPdtConfig>,
    #[serde(default)]
    pub gaussian: Option<GaussianConfig>,
    #[serde(default)]
    pub bell: Option<BellConfig>,
    #[serde(default)]
    pub nonclassicality: Option<NonclassicalityConfig>,
}

fn default_bins() -> usize {
    DEFAULT_HISTOGRAM_BINS
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
            conditional_pdt: None,
            gaussian: None,
            bell: None,
            nonclassicality: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalPdtConfig {
    /// Aperture radius of the sample set to use, m; the primary one if absent.
    #[serde(default)]
    pub aperture_radius: Option<f64>,
    pub eta_min: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianConfig {
    #[serde(default)]
    pub aperture_radius: Option<f64>,
    pub xi: Vec<f64>,
    #[serde(default)]
    pub losses: DeterministicLosses,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellConfig {
    #[serde(default)]
    pub aperture_radius: Option<f64>,
    pub noise_mean: f64,
    pub deterministic_db: f64,
    #[serde(default = "default_splitter_db")]
    pub splitter_db: f64,
    pub memory_decay_db_per_ms: Vec<f64>,
    pub wind_speeds: Vec<f64>,
    #[serde(default)]
    pub stored_arm: StoredArm,
    #[serde(default)]
    pub angles: ChshAngles,
    /// Squeezing grid for the multipair maximisation; the multipair source is
    /// skipped when empty.
    #[serde(default)]
    pub xi_grid: Vec<f64>,
    #[serde(default = "default_true")]
    pub include_bell_source: bool,
}

fn default_splitter_db() -> f64 {
    3.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonclassicalityConfig {
    #[serde(default)]
    pub aperture_radius: Option<f64>,
    pub alpha0: f64,
    pub xi: f64,
    pub eta_min: f64,
    /// Overall deterministic loss, dB.
    pub deterministic_db: f64,
    pub detectors: Vec<usize>,
    #[serde(default)]
    pub scan: ScanOptions,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Hash of the resolved configuration.
    pub fn hash(&self) -> String {
        digest(self)
    }

    pub fn monte_carlo(&self) -> MonteCarloConfig {
        MonteCarloConfig {
            turbulence: self.turbulence,
            geometry: self.geometry.clone(),
            beam: self.beam,
            shifts: self.shifts.clone(),
            n_samples: self.n_samples,
            master_seed: self.master_seed,
            screens: self.screens,
            extra_aperture_radii: self.extra_aperture_radii.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| match e {
            Error::InvalidArgument(m) => config_error(m),
            other => other,
        };
        self.monte_carlo().validate().map_err(wrap)?;
        let radii = self.monte_carlo().aperture_radii();
        let check_radius = |r: Option<f64>, block: &str| -> Result<()> {
            match r {
                Some(r) if !radii.iter().any(|x| (x - r).abs() <= 1e-12) => Err(config_error(format!(
                    "{block}: aperture radius {r} m is not simulated"
                ))),
                _ => Ok(()),
            }
        };
        let a = &self.analysis;
        if a.histogram_bins == 0 {
            return Err(config_error("histogram_bins must be positive"));
        }
        if let Some(c) = &a.conditional_pdt {
            check_radius(c.aperture_radius, "conditional_pdt")?;
            if c.eta_min.iter().any(|e| !(0.0..1.0).contains(e)) {
                return Err(config_error("conditional_pdt: eta_min values must lie in [0, 1)"));
            }
        }
        if let Some(g) = &a.gaussian {
            check_radius(g.aperture_radius, "gaussian")?;
            if g.xi.is_empty() || g.xi.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(config_error("gaussian: xi must be a non-empty list of values ≥ 0"));
            }
            g.losses.validate().map_err(wrap)?;
        }
        if let Some(b) = &a.bell {
            check_radius(b.aperture_radius, "bell")?;
            if b.wind_speeds.is_empty() || b.wind_speeds.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(config_error("bell: wind_speeds must be positive"));
            }
            if b.memory_decay_db_per_ms.is_empty()
                || b.memory_decay_db_per_ms.iter().any(|v| !(v.is_finite() && *v >= 0.0))
            {
                return Err(config_error("bell: decay rates must be non-negative"));
            }
            if !(b.noise_mean >= 0.0 && b.deterministic_db >= 0.0 && b.splitter_db >= 0.0) {
                return Err(config_error("bell: noise and losses must be non-negative"));
            }
            if b.xi_grid.windows(2).any(|w| !(w[1] > w[0])) || b.xi_grid.iter().any(|x| *x < 0.0) {
                return Err(config_error("bell: xi_grid must be increasing and non-negative"));
            }
            if b.xi_grid.len() == 1 {
                return Err(config_error("bell: xi_grid needs at least two points"));
            }
        }
        if let Some(n) = &a.nonclassicality {
            check_radius(n.aperture_radius, "nonclassicality")?;
            if !(0.0..1.0).contains(&n.eta_min) {
                return Err(config_error("nonclassicality: eta_min must lie in [0, 1)"));
            }
            if n.detectors.is_empty() || n.detectors.contains(&0) {
                return Err(config_error("nonclassicality: detector counts must be positive"));
            }
            if !(n.deterministic_db >= 0.0) || !n.alpha0.is_finite() || !n.xi.is_finite() {
                return Err(config_error("nonclassicality: invalid state or loss"));
            }
            if n.scan.events == 0 {
                return Err(config_error("nonclassicality: scan.events must be positive"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "turbulence": {"cn2": 1e-16, "inner_scale": 0.002, "outer_scale": 20.0},
        "geometry": {"wavelength": 8.08e-7, "distance": 1000.0, "n_screens": 2,
                     "grid_n": 64, "grid_step": 0.002, "aperture_radius": 0.02},
        "beam": {"waist_radius": 0.02},
        "shifts": [0.0, 0.01],
        "n_samples": 4,
        "master_seed": 1
    }"#;

    #[test]
    fn minimal_config_parses() {
        let c = RunConfig::from_json_str(MINIMAL).unwrap();
        assert_eq!(c.screens.ring_count, crate::screens::DEFAULT_RING_COUNT);
        assert_eq!(c.analysis.histogram_bins, 100);
        let back = RunConfig::from_json_str(&c.to_json_pretty()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"n_samples\"", "\"bogus\": 1, \"n_samples\"");
        assert!(matches!(RunConfig::from_json_str(&text), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_values_rejected() {
        let text = MINIMAL.replace("[0.0, 0.01]", "[0.01, 0.0]");
        assert!(matches!(RunConfig::from_json_str(&text), Err(Error::Config(_))));
        let text = MINIMAL.replace("\"grid_n\": 64", "\"grid_n\": 60");
        assert!(matches!(RunConfig::from_json_str(&text), Err(Error::Config(_))));
    }
}
