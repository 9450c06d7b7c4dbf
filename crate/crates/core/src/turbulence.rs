//! Refractive-index spectrum of the turbulent atmosphere and channel geometry.
//!
//! The spectrum is the modified von Kármán–Tatarskii form
//!
//! ```text
//! Φn(κ) = 0.033 Cn² exp(−κ²/κm²) / (κ² + κ0²)^(11/6),   κm = 5.92/ℓ0,  κ0 = 2π/L0
//! ```
//!
//! A thin slab of thickness `dz` turns it into the two-dimensional phase
//! spectrum `2π k² dz Φn(κ)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature;

/// Prefactor of the Kolmogorov-family refractive-index spectrum.
pub const SPECTRUM_PREFACTOR: f64 = 0.033;

/// Inner-scale cutoff constant: `κm = INNER_SCALE_FACTOR / ℓ0`.
pub const INNER_SCALE_FACTOR: f64 = 5.92;

/// Turbulence strength and scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurbulenceParams {
    /// Refractive-index structure constant, m^(−2/3).
    pub cn2: f64,
    /// Inner scale ℓ0, m.
    pub inner_scale: f64,
    /// Outer scale L0, m.
    pub outer_scale: f64,
    /// Low spectral cutoff used by the screen generator, rad/m.
    /// Defaults to `1/(15 L0)`.
    #[serde(default)]
    pub kappa_min: Option<f64>,
    /// High spectral cutoff used by the screen generator, rad/m.
    /// Defaults to `2/ℓ0`.
    #[serde(default)]
    pub kappa_max: Option<f64>,
}

impl TurbulenceParams {
    pub fn new(cn2: f64, inner_scale: f64, outer_scale: f64) -> Result<Self> {
        let p = Self {
            cn2,
            inner_scale,
            outer_scale,
            kappa_min: None,
            kappa_max: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_cutoffs(mut self, kappa_min: f64, kappa_max: f64) -> Result<Self> {
        self.kappa_min = Some(kappa_min);
        self.kappa_max = Some(kappa_max);
        self.validate()?;
        Ok(self)
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappa_min.unwrap_or(1.0 / (15.0 * self.outer_scale))
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa_max.unwrap_or(2.0 / self.inner_scale)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.cn2, self.inner_scale, self.outer_scale]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("turbulence parameters must be finite"));
        }
        if self.cn2 <= 0.0 {
            return Err(invalid(format!("cn2 must be positive, got {}", self.cn2)));
        }
        if !(self.inner_scale > 0.0 && self.inner_scale < self.outer_scale) {
            return Err(invalid(format!(
                "need 0 < inner scale < outer scale, got {} and {}",
                self.inner_scale, self.outer_scale
            )));
        }
        let (lo, hi) = (self.kappa_min(), self.kappa_max());
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
            return Err(invalid(format!(
                "need 0 < kappa_min < kappa_max, got {lo} and {hi}"
            )));
        }
        Ok(())
    }
}

/// A radially symmetric three-dimensional refractive-index spectrum with a
/// finite band used for screen synthesis.
pub trait RefractiveSpectrum: Sync {
    /// Spectral density Φn(κ), m³.
    fn density(&self, kappa: f64) -> f64;
    /// `(κmin, κmax)` band covered by the screen generator, rad/m.
    fn band(&self) -> (f64, f64);
}

impl RefractiveSpectrum for TurbulenceParams {
    fn density(&self, kappa: f64) -> f64 {
        von_karman_density(kappa, self)
    }

    fn band(&self) -> (f64, f64) {
        (self.kappa_min(), self.kappa_max())
    }
}

fn von_karman_density(kappa: f64, p: &TurbulenceParams) -> f64 {
    let km = INNER_SCALE_FACTOR / p.inner_scale;
    let k0 = 2.0 * PI / p.outer_scale;
    SPECTRUM_PREFACTOR * p.cn2 * (-(kappa * kappa) / (km * km)).exp()
        / (kappa * kappa + k0 * k0).powf(11.0 / 6.0)
}

/// Modified von Kármán refractive-index spectrum Φn(κ), m³.
pub fn phase_psd(kappa: f64, p: &TurbulenceParams) -> Result<f64> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(invalid(format!("kappa must be finite and >= 0, got {kappa}")));
    }
    Ok(von_karman_density(kappa, p))
}

/// Two-dimensional phase spectrum of a slab of thickness `dz`, rad² m².
pub fn slab_phase_psd<S: RefractiveSpectrum + ?Sized>(s: &S, kappa: f64, wavenumber: f64, dz: f64) -> f64 {
    2.0 * PI * wavenumber * wavenumber * dz * s.density(kappa)
}

/// Phase variance contributed by the band `[lo, hi]` of a slab:
/// `4π² k² dz ∫ κ Φn(κ) dκ`.
pub fn band_phase_variance<S: RefractiveSpectrum + ?Sized>(
    s: &S,
    wavenumber: f64,
    dz: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    // Integrate in ln κ; the integrand κ²Φn is smooth there.
    let f = |u: f64| {
        let k = u.exp();
        k * k * s.density(k)
    };
    let (a, b) = (lo.ln(), hi.ln());
    let panels = ((b - a) / 0.05).ceil().max(1.0) as usize;
    2.0 * PI * 2.0 * PI * wavenumber * wavenumber * dz * quadrature::integrate(f, a, b, panels, 8)
}

/// Receiver geometry and discretisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelGeometry {
    /// Optical wavelength, m.
    pub wavelength: f64,
    /// Channel length z_ap, m.
    pub distance: f64,
    /// Number of phase screens M.
    pub n_screens: usize,
    /// Grid points per axis (power of two).
    pub grid_n: usize,
    /// Grid step, m.
    pub grid_step: f64,
    /// Receiver aperture radius R_ap, m.
    pub aperture_radius: f64,
}

impl ChannelGeometry {
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Slab thickness z_s = z_ap / M.
    pub fn slab_thickness(&self) -> f64 {
        self.distance / self.n_screens as f64
    }

    /// Side length of the square grid, m.
    pub fn grid_extent(&self) -> f64 {
        self.grid_n as f64 * self.grid_step
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(invalid("wavelength must be positive"));
        }
        if !(self.distance.is_finite() && self.distance >= 0.0) {
            return Err(invalid("distance must be non-negative"));
        }
        if self.n_screens < 1 {
            return Err(invalid("at least one phase screen is required"));
        }
        if !self.grid_n.is_power_of_two() || self.grid_n < 8 {
            return Err(invalid(format!(
                "grid_n must be a power of two >= 8, got {}",
                self.grid_n
            )));
        }
        if !(self.grid_step.is_finite() && self.grid_step > 0.0) {
            return Err(invalid("grid_step must be positive"));
        }
        if !(self.aperture_radius.is_finite() && self.aperture_radius >= 0.0) {
            return Err(invalid("aperture_radius must be non-negative"));
        }
        Ok(())
    }
}

/// Plane-wave Rytov variance `1.23 Cn² k^(7/6) z^(11/6)`.
pub fn rytov_variance(p: &TurbulenceParams, g: &ChannelGeometry) -> f64 {
    1.23 * p.cn2 * g.wavenumber().powf(7.0 / 6.0) * g.distance.powf(11.0 / 6.0)
}

/// Plane-wave Fried parameter `(0.423 k² Cn² z)^(−3/5)`, m.
pub fn fried_parameter(p: &TurbulenceParams, g: &ChannelGeometry) -> f64 {
    let k = g.wavenumber();
    (0.423 * k * k * p.cn2 * g.distance).powf(-3.0 / 5.0)
}
