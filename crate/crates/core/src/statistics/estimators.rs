use serde::{Deserialize, Serialize};

use super::samples::SampleSet;
use crate::error::{invalid, Error, Result};

pub const DEFAULT_HISTOGRAM_BINS: usize = 100;

/// Histogram density on `[0, 1]` with uniform bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    /// Number of samples that entered the histogram.
    pub count: usize,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.density.len()
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.bins() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// `Σ density · width`.
    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width()
    }
}

fn histogram(values: impl Iterator<Item = f64>, bins: usize) -> Histogram {
    let mut counts = vec![0usize; bins];
    let mut n = 0usize;
    for v in values {
        let i = ((v * bins as f64) as usize).min(bins - 1);
        counts[i] += 1;
        n += 1;
    }
    let scale = bins as f64 / n as f64;
    Histogram {
        edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
        density: counts.iter().map(|&c| c as f64 * scale).collect(),
        count: n,
    }
}

/// Single-time PDT at `shift`.
pub fn marginal_pdt(samples: &SampleSet, shift: f64, bins: usize) -> Result<Histogram> {
    conditional_pdt(samples, 0.0, shift, bins)
}

/// PDT of `η_shift` over the records whose `η₀ ≥ eta_min`.
pub fn conditional_pdt(samples: &SampleSet, eta_min: f64, shift: f64, bins: usize) -> Result<Histogram> {
    if !(0.0..1.0).contains(&eta_min) {
        return Err(invalid(format!("eta_min must lie in [0, 1), got {eta_min}")));
    }
    if bins == 0 {
        return Err(invalid("histogram needs at least one bin"));
    }
    let k = samples.shift_index(shift)?;
    let survivors = samples.pairs(k).filter(|(e0, _)| *e0 >= eta_min).count();
    if survivors == 0 {
        return Err(Error::EmptySelection { survivors });
    }
    Ok(histogram(
        samples
            .pairs(k)
            .filter(|(e0, _)| *e0 >= eta_min)
            .map(|(_, es)| es),
        bins,
    ))
}

/// Selection efficiency `P(η₀ ≥ eta_min)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exceedance {
    pub value: f64,
    /// Binomial standard error.
    pub stderr: f64,
    pub survivors: usize,
    pub total: usize,
}

pub fn exceedance(samples: &SampleSet, eta_min: f64) -> Result<Exceedance> {
    if !(0.0..1.0).contains(&eta_min) {
        return Err(invalid(format!("eta_min must lie in [0, 1), got {eta_min}")));
    }
    let total = samples.len();
    let survivors = samples.pairs(0).filter(|(e0, _)| *e0 >= eta_min).count();
    let p = survivors as f64 / total as f64;
    Ok(Exceedance {
        value: p,
        stderr: (p * (1.0 - p) / total as f64).sqrt(),
        survivors,
        total,
    })
}

/// Transmittance moments at one shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsRow {
    pub shift: f64,
    pub count: usize,
    /// `⟨η₀⟩`
    pub mean0: f64,
    /// `⟨η_s⟩`
    pub mean_s: f64,
    /// `⟨√(η₀ η_s)⟩`
    pub cross: f64,
    /// `⟨η_s²⟩`
    pub m2: f64,
    /// `⟨Δη_s²⟩`, unbiased.
    pub var: f64,
    pub pearson: f64,
    /// Pearson correlation was undefined (a zero-variance column) and the
    /// reported value is a placeholder.
    pub pearson_flagged: bool,
    pub se_mean0: f64,
    pub se_mean_s: f64,
    pub se_cross: f64,
    pub se_m2: f64,
    pub se_pearson: f64,
}

/// Moments rows for every shift of a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMoments {
    pub rows: Vec<MomentsRow>,
}

impl ChannelMoments {
    pub fn from_samples(samples: &SampleSet) -> Result<Self> {
        let rows = samples
            .shifts()
            .iter()
            .map(|&s| moments(samples, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    pub fn shifts(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.shift).collect()
    }

    /// `(s, r(s))` pairs.
    pub fn pearson_curve(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.shift, r.pearson)).collect()
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn moments(samples: &SampleSet, shift: f64) -> Result<MomentsRow> {
    let k = samples.shift_index(shift)?;
    let e0 = samples.column(0);
    let es = samples.column(k);
    let n = e0.len();
    let nf = n as f64;
    let cross_vals: Vec<f64> = e0.iter().zip(&es).map(|(a, b)| (a * b).sqrt()).collect();
    let sq_vals: Vec<f64> = es.iter().map(|v| v * v).collect();
    let (mean0, se_mean0) = mean_and_se(&e0);
    let (mean_s, se_mean_s) = mean_and_se(&es);
    let (cross, se_cross) = mean_and_se(&cross_vals);
    let (m2, se_m2) = mean_and_se(&sq_vals);

    let ss0: f64 = e0.iter().map(|v| (v - mean0).powi(2)).sum();
    let sss: f64 = es.iter().map(|v| (v - mean_s).powi(2)).sum();
    let cov: f64 = e0
        .iter()
        .zip(&es)
        .map(|(a, b)| (a - mean0) * (b - mean_s))
        .sum();
    let var = if n > 1 { sss / (nf - 1.0) } else { 0.0 };

    let (pearson, pearson_flagged) = if k == 0 {
        (1.0, false)
    } else if ss0 > 0.0 && sss > 0.0 {
        ((cov / (ss0 * sss).sqrt()).clamp(-1.0, 1.0), false)
    } else {
        (0.0, true)
    };
    let se_pearson = if k == 0 || pearson_flagged || n < 4 {
        0.0
    } else {
        (1.0 - pearson * pearson) / (nf - 3.0).sqrt()
    };
    Ok(MomentsRow {
        shift: samples.shifts()[k],
        count: n,
        mean0,
        mean_s,
        cross,
        m2,
        var,
        pearson,
        pearson_flagged,
        se_mean0,
        se_mean_s,
        se_cross,
        se_m2,
        se_pearson,
    })
}

/// Aperture-averaged coherence radius with the crossings of the `r ± se`
/// curves as an error bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceRadius {
    pub rho0: f64,
    /// Crossing of `r − se`; `None` when that curve starts below the level.
    pub lower: Option<f64>,
    /// Crossing of `r + se`; `None` when that curve stays above the level.
    pub upper: Option<f64>,
}

/// First downward crossing of `e⁻¹` by a correlation curve sorted by shift,
/// located by linear interpolation between the bracketing points.
pub fn coherence_radius(curve: &[(f64, f64)]) -> Result<f64> {
    crossing(curve, (-1.0f64).exp())
}

fn crossing(curve: &[(f64, f64)], level: f64) -> Result<f64> {
    if curve.is_empty() {
        return Err(invalid("empty correlation curve"));
    }
    if curve.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(invalid("correlation curve shifts must be strictly increasing"));
    }
    if curve[0].1 <= level {
        return Ok(curve[0].0);
    }
    for w in curve.windows(2) {
        let ((s0, r0), (s1, r1)) = (w[0], w[1]);
        if r1 <= level {
            return Ok(s0 + (r0 - level) / (r0 - r1) * (s1 - s0));
        }
    }
    let min_value = curve.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Err(Error::OutOfRange { min_value })
}

pub fn coherence_radius_with_error(moments: &ChannelMoments) -> Result<CoherenceRadius> {
    let curve = moments.pearson_curve();
    let rho0 = coherence_radius(&curve)?;
    let shifted = |sign: f64| -> Vec<(f64, f64)> {
        moments
            .rows
            .iter()
            .map(|r| (r.shift, r.pearson + sign * r.se_pearson))
            .collect()
    };
    let level = (-1.0f64).exp();
    let lower_curve = shifted(-1.0);
    let lower = if lower_curve[0].1 > level {
        crossing(&lower_curve, level).ok()
    } else {
        None
    };
    let upper = crossing(&shifted(1.0), level).ok();
    Ok(CoherenceRadius { rho0, lower, upper })
}
