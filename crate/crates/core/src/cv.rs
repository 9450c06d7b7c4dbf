//! Gaussian entanglement of a two-mode squeezed vacuum whose modes travel
//! through the channel at two times separated by a wind-driven shift.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::interp::Pchip;
use crate::statistics::{ChannelMoments, MomentsRow};

/// Two-mode squeezed vacuum source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmsvSource {
    pub xi: f64,
}

impl TmsvSource {
    /// `10 log₁₀ e^{2ξ}`.
    pub fn squeezing_db(&self) -> f64 {
        squeezing_db(self.xi)
    }
}

pub fn squeezing_db(xi: f64) -> f64 {
    20.0 * xi / std::f64::consts::LN_10
}

pub fn db_to_transmittance(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Transmittance-independent losses. The early pulse sees the link and the
/// optics; the stored pulse additionally sees the memory write and read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeterministicLosses {
    #[serde(default)]
    pub atmospheric_db_per_km: f64,
    #[serde(default)]
    pub link_km: f64,
    #[serde(default)]
    pub optics_db: f64,
    #[serde(default)]
    pub memory_write_db: f64,
    #[serde(default)]
    pub memory_read_db: f64,
}

impl Default for DeterministicLosses {
    fn default() -> Self {
        Self::none()
    }
}

impl DeterministicLosses {
    pub fn none() -> Self {
        Self {
            atmospheric_db_per_km: 0.0,
            link_km: 0.0,
            optics_db: 0.0,
            memory_write_db: 0.0,
            memory_read_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.atmospheric_db_per_km,
            self.link_km,
            self.optics_db,
            self.memory_write_db,
            self.memory_read_db,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("losses must be finite and non-negative"));
        }
        Ok(())
    }

    /// Factor `T₀` on the early arm.
    pub fn t_early(&self) -> f64 {
        db_to_transmittance(self.atmospheric_db_per_km * self.link_km + self.optics_db)
    }

    /// Factor `T_τ` on the stored arm.
    pub fn t_stored(&self) -> f64 {
        db_to_transmittance(
            self.atmospheric_db_per_km * self.link_km
                + self.optics_db
                + self.memory_write_db
                + self.memory_read_db,
        )
    }
}

/// Simon certifier and its two factors, `w = bracket1 · bracket2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimonValue {
    pub w: f64,
    pub bracket1: f64,
    pub bracket2: f64,
}

impl SimonValue {
    pub fn entangled(&self) -> bool {
        self.w < 0.0
    }

    pub fn second_bracket_positive(&self) -> bool {
        self.bracket2 > 0.0
    }
}

/// Certifier from the raw moments `⟨η₀⟩`, `⟨η_τ⟩`, `⟨√(η₀η_τ)⟩` after the
/// deterministic losses have been folded in.
pub fn simon_from_moments(mean0: f64, mean_tau: f64, cross: f64, xi: f64) -> Result<SimonValue> {
    if !(xi.is_finite() && xi >= 0.0) {
        return Err(invalid(format!("squeezing parameter must be finite and ≥ 0, got {xi}")));
    }
    let sh2 = xi.sinh().powi(2);
    let ch2 = xi.cosh().powi(2);
    let s2x = (2.0 * xi).sinh().powi(2);
    let c2 = cross * cross;
    let ab = mean0 * mean_tau;
    let bracket1 = sh2 * (-c2 * ch2 + ab * sh2);
    let bracket2 = 1.0 - 0.25 * c2 * s2x + sh2 * (mean0 + mean_tau + ab * sh2);
    Ok(SimonValue {
        w: bracket1 * bracket2,
        bracket1,
        bracket2,
    })
}

pub fn simon_certifier(m: &MomentsRow, xi: f64, losses: &DeterministicLosses) -> Result<SimonValue> {
    losses.validate()?;
    let t0 = losses.t_early();
    let tt = losses.t_stored();
    let v = simon_from_moments(t0 * m.mean0, tt * m.mean_s, (t0 * tt).sqrt() * m.cross, xi)?;
    if !v.second_bracket_positive() && xi > 0.0 {
        log::warn!(
            "second factor of the Simon certifier is {} at shift {} m; the sign of W is not set by the first factor",
            v.bracket2,
            m.shift
        );
    }
    Ok(v)
}

/// Where the certifier changes sign along the shift grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdOutcome {
    /// First zero of W, with the grid cell that brackets it.
    Crossing { s_th: f64, cell: (f64, f64) },
    /// W < 0 at every shift.
    EntangledThroughout { max_w: f64 },
    /// W ≥ 0 already at the first shift.
    NeverEntangled { min_w: f64 },
    /// W vanishes identically (ξ = 0).
    Degenerate,
}

impl ThresholdOutcome {
    pub fn shift(&self) -> Option<f64> {
        match self {
            Self::Crossing { s_th, .. } => Some(*s_th),
            _ => None,
        }
    }
}

/// Threshold shift `s_th` where W(s) first reaches zero.
///
/// W is interpolated between grid shifts by a monotone cubic and the zero
/// is refined by bisection inside the bracketing cell.
pub fn threshold_shift(
    moments: &ChannelMoments,
    xi: f64,
    losses: &DeterministicLosses,
) -> Result<ThresholdOutcome> {
    if moments.rows.is_empty() {
        return Err(invalid("no moments"));
    }
    let w: Vec<f64> = moments
        .rows
        .iter()
        .map(|r| simon_certifier(r, xi, losses).map(|v| v.w))
        .collect::<Result<_>>()?;
    if w.iter().all(|v| *v == 0.0) {
        return Ok(ThresholdOutcome::Degenerate);
    }
    let s = moments.shifts();
    if w[0] >= 0.0 {
        let min_w = w.iter().copied().fold(f64::INFINITY, f64::min);
        return Ok(ThresholdOutcome::NeverEntangled { min_w });
    }
    let Some(i) = w.iter().position(|v| *v >= 0.0) else {
        let max_w = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Ok(ThresholdOutcome::EntangledThroughout { max_w });
    };
    let cell = (s[i - 1], s[i]);
    if w[i] == 0.0 {
        return Ok(ThresholdOutcome::Crossing { s_th: s[i], cell });
    }
    let p = Pchip::new(&s, &w)?;
    Ok(ThresholdOutcome::Crossing {
        s_th: p.root_in(i - 1),
        cell,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(mean0: f64, mean_s: f64, cross: f64) -> MomentsRow {
        MomentsRow {
            shift: 0.0,
            count: 1,
            mean0,
            mean_s,
            cross,
            m2: 0.0,
            var: 0.0,
            pearson: 1.0,
            pearson_flagged: false,
            se_mean0: 0.0,
            se_mean_s: 0.0,
            se_cross: 0.0,
            se_m2: 0.0,
            se_pearson: 0.0,
        }
    }

    #[test]
    fn lossless_limit() {
        let v = simon_certifier(&row(1.0, 1.0, 1.0), 1.0, &DeterministicLosses::none()).unwrap();
        let (sh, ch) = (1f64.sinh(), 1f64.cosh());
        assert!((v.bracket1 + sh * sh).abs() < 1e-12);
        assert!((v.bracket2 - ch * ch).abs() < 1e-12);
        assert!((v.w + sh * sh * ch * ch).abs() < 1e-12);
    }

    #[test]
    fn zero_squeezing_and_negative_rejected() {
        let v = simon_certifier(&row(0.3, 0.4, 0.2), 0.0, &DeterministicLosses::none()).unwrap();
        assert_eq!(v.w, 0.0);
        assert!(simon_certifier(&row(0.3, 0.4, 0.2), -0.1, &DeterministicLosses::none()).is_err());
    }

    #[test]
    fn squeezing_in_db() {
        assert!((squeezing_db(2.0) - 17.37).abs() < 0.01);
    }

    #[test]
    fn memory_loss_on_stored_arm_only() {
        let l = DeterministicLosses {
            memory_write_db: 1.0,
            memory_read_db: 2.0,
            ..DeterministicLosses::none()
        };
        assert_eq!(l.t_early(), 1.0);
        assert!((l.t_stored() - 10f64.powf(-0.3)).abs() < 1e-15);
    }

    #[test]
    fn large_squeezing_finite() {
        let v = simon_certifier(&row(0.2, 0.3, 0.1), 5.0, &DeterministicLosses::none()).unwrap();
        assert!(v.w.is_finite());
    }
}
