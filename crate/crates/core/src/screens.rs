//! Sparse-spectrum phase screens.
//!
//! Each screen stores one random spectral mode per ring of a logarithmic
//! partition of `[κmin, κmax]`:
//!
//! ```text
//! φ(x, y; s) = Σj aj cos(kxj (x + s) + kyj y + θj)
//! ```
//!
//! The mode magnitude is drawn inside its ring with density ∝ κ Φn(κ), the
//! direction and phase offset uniformly, and `aj² / 2` equals the ring's share
//! of the slab phase variance. Because the representation is analytic, a
//! screen can be evaluated at any transverse wind shift `s` without ever
//! rendering a long screen.

use ndarray::{s, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::quadrature;
use crate::seed::derive_seed;
use crate::turbulence::{ChannelGeometry, RefractiveSpectrum};

/// Spectral rings used for the 50 km channel.
pub const DEFAULT_RING_COUNT: usize = 1024;

/// Fewer rings than this cannot represent a Kolmogorov band.
pub const MIN_RING_COUNT: usize = 8;

const CDF_PANELS: usize = 16;

/// How per-ring amplitudes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeLaw {
    /// `a = √(2σ²)` exactly.
    #[default]
    Deterministic,
    /// Rayleigh-distributed with `E[a²] = 2σ²`.
    Rayleigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenOptions {
    #[serde(default = "default_ring_count")]
    pub ring_count: usize,
    #[serde(default)]
    pub amplitude_law: AmplitudeLaw,
}

fn default_ring_count() -> usize {
    DEFAULT_RING_COUNT
}

impl Default for ScreenOptions {
    fn default() -> Self {
        Self {
            ring_count: DEFAULT_RING_COUNT,
            amplitude_law: AmplitudeLaw::Deterministic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMode {
    /// rad/m
    pub kx: f64,
    /// rad/m
    pub ky: f64,
    /// rad
    pub amplitude: f64,
    /// rad
    pub phase_offset: f64,
}

impl SpectralMode {
    pub fn magnitude(&self) -> f64 {
        self.kx.hypot(self.ky)
    }
}

/// One realization of a sparse-spectrum screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSpectrum {
    pub modes: Vec<SpectralMode>,
    pub ring_count: usize,
    pub rng_seed: u64,
}

/// Precomputed ring partition: edges, per-ring phase variances and the
/// in-ring sampling tables. Shared by every screen of a run.
#[derive(Debug, Clone)]
pub struct RingTable {
    edges: Vec<f64>,
    variances: Vec<f64>,
    // Per ring: ln κ panel boundaries and the cumulative weight at each.
    cdf_log_kappa: Vec<[f64; CDF_PANELS + 1]>,
    cdf_mass: Vec<[f64; CDF_PANELS + 1]>,
}

impl RingTable {
    pub fn new<S: RefractiveSpectrum + ?Sized>(
        spectrum: &S,
        wavenumber: f64,
        slab_thickness: f64,
        ring_count: usize,
    ) -> Result<Self> {
        if ring_count < MIN_RING_COUNT {
            return Err(invalid(format!(
                "ring_count must be at least {MIN_RING_COUNT}, got {ring_count}"
            )));
        }
        if !(wavenumber > 0.0 && slab_thickness >= 0.0) {
            return Err(invalid("wavenumber must be positive and slab thickness non-negative"));
        }
        let (lo, hi) = spectrum.band();
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(invalid(format!("bad spectral band [{lo}, {hi}]")));
        }
        let ratio = hi / lo;
        let edges: Vec<f64> = (0..=ring_count)
            .map(|j| lo * ratio.powf(j as f64 / ring_count as f64))
            .collect();
        // Phase variance per unit ∫κΦn dκ.
        let scale = 4.0 * PI * PI * wavenumber * wavenumber * slab_thickness;
        let weight = |u: f64| {
            let k = u.exp();
            k * k * spectrum.density(k)
        };
        let (gx, gw) = quadrature::gauss_legendre(4);
        let mut variances = Vec::with_capacity(ring_count);
        let mut cdf_log_kappa = Vec::with_capacity(ring_count);
        let mut cdf_mass = Vec::with_capacity(ring_count);
        for j in 0..ring_count {
            let (a, b) = (edges[j].ln(), edges[j + 1].ln());
            let h = (b - a) / CDF_PANELS as f64;
            let mut us = [0.0; CDF_PANELS + 1];
            let mut cum = [0.0; CDF_PANELS + 1];
            us[0] = a;
            for p in 0..CDF_PANELS {
                let mid = a + h * (p as f64 + 0.5);
                let part: f64 = gx
                    .iter()
                    .zip(&gw)
                    .map(|(x, w)| w * weight(mid + 0.5 * h * x))
                    .sum::<f64>()
                    * 0.5
                    * h;
                us[p + 1] = a + h * (p + 1) as f64;
                cum[p + 1] = cum[p] + part;
            }
            us[CDF_PANELS] = b;
            variances.push(scale * cum[CDF_PANELS]);
            cdf_log_kappa.push(us);
            cdf_mass.push(cum);
        }
        Ok(Self {
            edges,
            variances,
            cdf_log_kappa,
            cdf_mass,
        })
    }

    pub fn for_geometry<S: RefractiveSpectrum + ?Sized>(
        spectrum: &S,
        geometry: &ChannelGeometry,
        ring_count: usize,
    ) -> Result<Self> {
        Self::new(
            spectrum,
            geometry.wavenumber(),
            geometry.slab_thickness(),
            ring_count,
        )
    }

    pub fn ring_count(&self) -> usize {
        self.variances.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Phase variance carried by each ring, rad².
    pub fn ring_variances(&self) -> &[f64] {
        &self.variances
    }

    /// Expected single-point phase variance of a screen, rad².
    pub fn total_variance(&self) -> f64 {
        self.variances.iter().sum()
    }

    fn draw_magnitude<R: Rng>(&self, ring: usize, rng: &mut R) -> f64 {
        let cum = &self.cdf_mass[ring];
        let us = &self.cdf_log_kappa[ring];
        let total = cum[CDF_PANELS];
        if total <= 0.0 {
            // Empty ring (spectrum underflow): fall back to log-uniform.
            let t: f64 = rng.random();
            return (us[0] + t * (us[CDF_PANELS] - us[0])).exp();
        }
        let target = rng.random::<f64>() * total;
        let p = cum[1..]
            .iter()
            .position(|&c| c >= target)
            .unwrap_or(CDF_PANELS - 1);
        let span = cum[p + 1] - cum[p];
        let t = if span > 0.0 { (target - cum[p]) / span } else { 0.5 };
        (us[p] + t.clamp(0.0, 1.0) * (us[p + 1] - us[p])).exp()
    }

    /// Draws one screen realization.
    pub fn sample(&self, seed: u64, law: AmplitudeLaw) -> SparseSpectrum {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..self.ring_count())
            .map(|j| {
                let kappa = self.draw_magnitude(j, &mut rng);
                let direction = 2.0 * PI * rng.random::<f64>();
                let phase_offset = 2.0 * PI * rng.random::<f64>();
                let sigma2 = self.variances[j];
                let amplitude = match law {
                    AmplitudeLaw::Deterministic => (2.0 * sigma2).sqrt(),
                    AmplitudeLaw::Rayleigh => {
                        // 1 − U lies in (0, 1], keeping the log finite.
                        let u: f64 = 1.0 - rng.random::<f64>();
                        sigma2.sqrt() * (-2.0 * u.ln()).sqrt()
                    }
                };
                SpectralMode {
                    kx: kappa * direction.cos(),
                    ky: kappa * direction.sin(),
                    amplitude,
                    phase_offset,
                }
            })
            .collect();
        SparseSpectrum {
            modes,
            ring_count: self.ring_count(),
            rng_seed: seed,
        }
    }
}

/// Samples one screen for a slab of `geometry`.
pub fn sample_spectrum<S: RefractiveSpectrum + ?Sized>(
    spectrum: &S,
    geometry: &ChannelGeometry,
    options: &ScreenOptions,
    seed: u64,
) -> Result<SparseSpectrum> {
    let table = RingTable::for_geometry(spectrum, geometry, options.ring_count)?;
    Ok(table.sample(seed, options.amplitude_law))
}

/// The M screens of one atmospheric realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseScreenSet {
    pub screens: Vec<SparseSpectrum>,
    /// z-coordinates of the screens (interval centres), m.
    pub positions: Vec<f64>,
    pub slab_thickness: f64,
}

impl SparseScreenSet {
    /// Screen `j` is seeded with `derive_seed(seed, j)`.
    pub fn sample(table: &RingTable, geometry: &ChannelGeometry, seed: u64, law: AmplitudeLaw) -> Self {
        let m = geometry.n_screens;
        let dz = geometry.slab_thickness();
        Self {
            screens: (0..m)
                .map(|j| table.sample(derive_seed(seed, j as u64), law))
                .collect(),
            positions: (0..m).map(|j| dz * (j as f64 + 0.5)).collect(),
            slab_thickness: dz,
        }
    }

    /// Screen set whose every screen has zero amplitude.
    pub fn zero(geometry: &ChannelGeometry) -> Self {
        let m = geometry.n_screens;
        let dz = geometry.slab_thickness();
        Self {
            screens: (0..m)
                .map(|_| SparseSpectrum {
                    modes: Vec::new(),
                    ring_count: 0,
                    rng_seed: 0,
                })
                .collect(),
            positions: (0..m).map(|j| dz * (j as f64 + 0.5)).collect(),
            slab_thickness: dz,
        }
    }

    pub fn len(&self) -> usize {
        self.screens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.screens.is_empty()
    }
}

/// Phase at a single point by direct summation.
pub fn evaluate_at(spectrum: &SparseSpectrum, x: f64, y: f64, shift: f64) -> f64 {
    spectrum
        .modes
        .iter()
        .map(|m| m.amplitude * (m.kx * (x + shift) + m.ky * y + m.phase_offset).cos())
        .sum()
}

/// Separable evaluator of one screen on a grid.
///
/// With `α(y) = ky·y + θ + kx·s` and `β(x) = kx·x` the screen is
/// `Σ a cos α cos β − a sin α sin β`, a product of an `n × 2J` matrix that
/// depends on the shift with a `2J × n` matrix that does not. The latter is
/// cached here so re-evaluating at many shifts costs one matrix product each.
#[derive(Debug, Clone)]
pub struct ScreenEvaluator {
    grid: Grid,
    coords: Vec<f64>,
    column_basis: Array2<f64>,
}

impl ScreenEvaluator {
    pub fn new(spectrum: &SparseSpectrum, grid: Grid) -> Self {
        let coords = grid.coordinates();
        let j = spectrum.modes.len();
        let mut column_basis = Array2::<f64>::zeros((2 * j, grid.n));
        for (idx, m) in spectrum.modes.iter().enumerate() {
            for (c, &x) in coords.iter().enumerate() {
                let (s, co) = (m.kx * x).sin_cos();
                column_basis[[idx, c]] = co;
                column_basis[[j + idx, c]] = s;
            }
        }
        Self {
            grid,
            coords,
            column_basis,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Screen values as an `n × n` array indexed `[y][x]`, rad.
    pub fn evaluate(&self, spectrum: &SparseSpectrum, shift: f64) -> Array2<f64> {
        let n = self.grid.n;
        let j = spectrum.modes.len();
        if j == 0 {
            return Array2::zeros((n, n));
        }
        assert_eq!(2 * j, self.column_basis.nrows(), "evaluator built for another spectrum");
        let mut rows = Array2::<f64>::zeros((n, 2 * j));
        for (r, &y) in self.coords.iter().enumerate() {
            for (idx, m) in spectrum.modes.iter().enumerate() {
                let (s, c) = (m.ky * y + m.phase_offset + m.kx * shift).sin_cos();
                rows[[r, idx]] = m.amplitude * c;
                rows[[r, j + idx]] = -m.amplitude * s;
            }
        }
        rows.dot(&self.column_basis)
    }
}

/// Screen rendered once over a strip wide enough for every shift that is a
/// whole number of grid steps; each shifted screen is then a column window.
#[derive(Debug, Clone)]
pub struct ScreenStrip {
    values: Array2<f64>,
    first_offset: i64,
    n: usize,
}

impl ScreenStrip {
    /// Renders columns for offsets `lo..=hi` (in grid steps) of `spectrum`.
    pub fn new(spectrum: &SparseSpectrum, grid: Grid, lo: i64, hi: i64) -> Self {
        assert!(hi >= lo);
        let n = grid.n;
        let width = n + (hi - lo) as usize;
        let j = spectrum.modes.len();
        if j == 0 {
            return Self {
                values: Array2::zeros((n, width)),
                first_offset: lo,
                n,
            };
        }
        let half = (n / 2) as i64;
        let mut column_basis = Array2::<f64>::zeros((2 * j, width));
        for (idx, m) in spectrum.modes.iter().enumerate() {
            for c in 0..width {
                let x = (c as i64 + lo - half) as f64 * grid.step;
                let (s, co) = (m.kx * x).sin_cos();
                column_basis[[idx, c]] = co;
                column_basis[[j + idx, c]] = s;
            }
        }
        let mut rows = Array2::<f64>::zeros((n, 2 * j));
        for r in 0..n {
            let y = grid.coordinate(r);
            for (idx, m) in spectrum.modes.iter().enumerate() {
                let (s, c) = (m.ky * y + m.phase_offset).sin_cos();
                rows[[r, idx]] = m.amplitude * c;
                rows[[r, j + idx]] = -m.amplitude * s;
            }
        }
        Self {
            values: rows.dot(&column_basis),
            first_offset: lo,
            n,
        }
    }

    /// Screen at a shift of `offset` grid steps.
    pub fn window(&self, offset: i64) -> ArrayView2<'_, f64> {
        let c = (offset - self.first_offset) as usize;
        self.values.slice(s![.., c..c + self.n])
    }
}

/// Shifts expressed as whole grid steps, or `None` when any shift is off the
/// lattice.
pub fn lattice_offsets(shifts: &[f64], step: f64) -> Option<Vec<i64>> {
    shifts
        .iter()
        .map(|&s| {
            let o = (s / step).round();
            ((s / step - o).abs() < 1e-9).then_some(o as i64)
        })
        .collect()
}

/// Screen values on `grid` at wind shift `shift`, indexed `[y][x]`, rad.
pub fn evaluate_screen(spectrum: &SparseSpectrum, grid: Grid, shift: f64) -> Array2<f64> {
    ScreenEvaluator::new(spectrum, grid).evaluate(spectrum, shift)
}

/// Frozen-flow displacement `s = v τ`, m.
pub fn wind_shift(speed: f64, delay: f64) -> Result<f64> {
    if !(speed.is_finite() && speed >= 0.0 && delay.is_finite() && delay >= 0.0) {
        return Err(invalid(format!(
            "wind speed and delay must be finite and non-negative, got {speed} and {delay}"
        )));
    }
    Ok(speed * delay)
}
