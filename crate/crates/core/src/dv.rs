//! CHSH parameter of polarization-entangled pulse pairs sent at two times
//! through a fluctuating-loss channel.
//!
//! Each side rotates its polarization by the analyzer angle and splits it
//! onto two on-off detectors with Poissonian noise counts. Events without a
//! click on some side are discarded; a double click on one side is mapped
//! to a uniformly random ±1 outcome.
//!
//! The source is a mixture over photon-pair sectors `n`. In sector `n` the
//! joint distribution `P_n(i, j)` of the `+`-port photon numbers on the two
//! sides is independent of the losses, and every no-click probability is a
//! polynomial in the per-side loss `1 − T`, so click patterns follow from
//! these distributions by inclusion–exclusion.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::db_to_transmittance;
use crate::error::{invalid, Error, Result};
use crate::statistics::SampleSet;

/// Largest truncated-norm deficit tolerated for the multipair source.
pub const CUTOFF_TOLERANCE: f64 = 1e-6;
/// Tail mass targeted when the cutoff is chosen automatically.
pub const AUTO_CUTOFF_TAIL: f64 = 1e-12;
const MAX_AUTO_CUTOFF: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DvSource {
    /// Single-pair singlet.
    Bell,
    /// Multipair down-conversion state with squeezing `xi`.
    Pdc { xi: f64 },
}

/// Which pulse is held in the quantum memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoredArm {
    #[default]
    Early,
    Late,
}

/// Analyzer angles `(a, a′; b, b′)`, rad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl Default for ChshAngles {
    fn default() -> Self {
        Self {
            a: 0.0,
            a_prime: PI / 4.0,
            b: PI / 8.0,
            b_prime: 3.0 * PI / 8.0,
        }
    }
}

impl ChshAngles {
    /// `(θ_A, θ_B)` pairs with their CHSH signs: `E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)`.
    pub fn terms(&self) -> [((f64, f64), f64); 4] {
        [
            ((self.a, self.b), 1.0),
            ((self.a, self.b_prime), -1.0),
            ((self.a_prime, self.b), 1.0),
            ((self.a_prime, self.b_prime), 1.0),
        ]
    }

    pub fn rotated(&self, phi: f64) -> Self {
        Self {
            a: self.a + phi,
            a_prime: self.a_prime + phi,
            b: self.b + phi,
            b_prime: self.b_prime + phi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DvExperiment {
    pub source: DvSource,
    #[serde(default)]
    pub angles: ChshAngles,
    /// Mean noise counts per detector and window.
    pub noise_mean: f64,
    /// Receiver and link losses other than the sorting splitter, per arm, dB.
    pub deterministic_db: f64,
    /// Loss of the beam splitter that sorts the received photons, dB.
    pub splitter_db: f64,
    /// Memory efficiency decay, dB/ms.
    pub memory_decay_db_per_ms: f64,
    #[serde(default)]
    pub stored_arm: StoredArm,
    /// Transverse wind speed, m/s.
    pub wind_v: f64,
    /// Photon-number cutoff for the multipair source; chosen automatically
    /// when absent.
    #[serde(default)]
    pub fock_cutoff: Option<usize>,
}

impl DvExperiment {
    /// Lossless, noiseless experiment with the given source.
    pub fn ideal(source: DvSource) -> Self {
        Self {
            source,
            angles: ChshAngles::default(),
            noise_mean: 0.0,
            deterministic_db: 0.0,
            splitter_db: 0.0,
            memory_decay_db_per_ms: 0.0,
            stored_arm: StoredArm::Early,
            wind_v: 10.0,
            fock_cutoff: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_mean.is_finite() && self.noise_mean >= 0.0) {
            return Err(invalid("noise_mean must be finite and non-negative"));
        }
        for (name, v) in [
            ("deterministic_db", self.deterministic_db),
            ("splitter_db", self.splitter_db),
            ("memory_decay_db_per_ms", self.memory_decay_db_per_ms),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be finite and non-negative")));
            }
        }
        if !(self.wind_v.is_finite() && self.wind_v > 0.0) {
            return Err(invalid("wind_v must be positive"));
        }
        let angles = self.angles;
        if ![angles.a, angles.a_prime, angles.b, angles.b_prime]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(invalid("analyzer angles must be finite"));
        }
        if let DvSource::Pdc { xi } = self.source {
            if !(xi.is_finite() && xi >= 0.0) {
                return Err(invalid("squeezing parameter must be finite and ≥ 0"));
            }
            if matches!(self.fock_cutoff, Some(c) if c < 2) {
                return Err(invalid("fock_cutoff must be at least 2"));
            }
        }
        Ok(())
    }

    /// Transmittance of detection and splitter, per arm.
    pub fn detection_transmittance(&self) -> f64 {
        db_to_transmittance(self.deterministic_db + self.splitter_db)
    }

    /// Memory efficiency after a storage time that corresponds to `shift`.
    pub fn memory_transmittance(&self, shift: f64) -> f64 {
        let tau_ms = shift / self.wind_v * 1e3;
        db_to_transmittance(self.memory_decay_db_per_ms * tau_ms)
    }

    /// Total per-arm transmittances `(T_A, T_B)` for channel values `(η₀, η_s)`.
    pub fn arm_transmittances(&self, eta0: f64, eta_s: f64, shift: f64) -> (f64, f64) {
        let det = self.detection_transmittance();
        let mem = self.memory_transmittance(shift);
        match self.stored_arm {
            StoredArm::Early => (eta0 * det * mem, eta_s * det),
            StoredArm::Late => (eta0 * det, eta_s * det * mem),
        }
    }

    fn with_xi(&self, xi: f64) -> Self {
        Self {
            source: DvSource::Pdc { xi },
            ..*self
        }
    }
}

/// Rotation of `n` photons from the (h, v) basis to the analyzer (+, −)
/// basis: entry `[i][p]` is the amplitude of `i` photons in `+` for the
/// input with `p` vertical photons. Built for `n = 0..=cutoff` by adding
/// one photon at a time, which avoids alternating binomial sums.
fn rotation_matrices(cutoff: usize, theta: f64) -> Vec<Vec<Vec<f64>>> {
    let (s, c) = theta.sin_cos();
    let mut all = vec![vec![vec![1.0]]];
    for n in 1..=cutoff {
        let prev = &all[n - 1];
        let mut u = vec![vec![0.0; n + 1]; n + 1];
        let nf = n as f64;
        for (i, row) in u.iter_mut().enumerate() {
            let fi = i as f64;
            let up = |p: usize| if i >= 1 { prev[i - 1][p] } else { 0.0 };
            let stay = |p: usize| if i < n { prev[i][p] } else { 0.0 };
            for (p, out) in row.iter_mut().enumerate().take(n) {
                *out = (c * fi.sqrt() * up(p) - s * (nf - fi).sqrt() * stay(p)) / (nf - p as f64).sqrt();
            }
            row[n] = (s * fi.sqrt() * up(n - 1) + c * (nf - fi).sqrt() * stay(n - 1)) / nf.sqrt();
        }
        all.push(u);
    }
    all
}

/// Photon-pair sectors of the source as `(n, weight)`.
fn sector_weights(source: DvSource, cutoff: usize) -> Vec<(usize, f64)> {
    match source {
        DvSource::Bell => vec![(1, 1.0)],
        DvSource::Pdc { xi } => {
            let t2 = xi.tanh().powi(2);
            let norm = xi.cosh().powi(-4);
            let mut w = norm;
            (0..=cutoff)
                .map(|n| {
                    let out = (n, (n + 1) as f64 * w);
                    w *= t2;
                    out
                })
                .collect()
        }
    }
}

/// Smallest cutoff whose neglected probability is below `tail`.
pub fn required_cutoff(xi: f64, tail: f64) -> Result<usize> {
    let mut acc = 0.0;
    for (n, w) in sector_weights(DvSource::Pdc { xi }, MAX_AUTO_CUTOFF) {
        acc += w;
        if 1.0 - acc <= tail && n >= 2 {
            return Ok(n);
        }
    }
    Err(Error::CutoffInsufficient { tail: 1.0 - acc })
}

/// Loss-independent part of the click model for one analyzer setting.
#[derive(Debug, Clone)]
struct SettingModel {
    /// `(weight, P_n)` with `P_n[i][j]` the probability of `i` photons in
    /// `A+` and `j` in `B+` given `n` pairs.
    sectors: Vec<(f64, Vec<Vec<f64>>)>,
}

impl SettingModel {
    fn new(source: DvSource, cutoff: usize, theta_a: f64, theta_b: f64) -> Self {
        let weights = sector_weights(source, cutoff);
        let top = weights.last().map(|w| w.0).unwrap_or(0);
        let ua = rotation_matrices(top, theta_a);
        let ub = rotation_matrices(top, theta_b);
        let sectors = weights
            .into_iter()
            .map(|(n, w)| {
                let (a, b) = (&ua[n], &ub[n]);
                let scale = 1.0 / ((n + 1) as f64).sqrt();
                let mut p = vec![vec![0.0; n + 1]; n + 1];
                for (i, row) in p.iter_mut().enumerate() {
                    for (j, out) in row.iter_mut().enumerate() {
                        let mut amp = 0.0;
                        for m in 0..=n {
                            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                            amp += sign * a[i][m] * b[j][n - m];
                        }
                        *out = (scale * amp).powi(2);
                    }
                }
                (w, p)
            })
            .collect();
        Self { sectors }
    }

    /// Click-pattern probabilities `[a][b]`, where each side outcome is
    /// indexed as 0 = no click, 1 = only `+`, 2 = only `−`, 3 = both.
    fn patterns(&self, t_a: f64, t_b: f64, noise_mean: f64) -> [[f64; 4]; 4] {
        let (xa, xb) = (1.0 - t_a, 1.0 - t_b);
        let q = (-noise_mean).exp();
        // Side subsets of silent detectors: bit 0 = `+`, bit 1 = `−`.
        let mut g = [[0.0; 4]; 4];
        for (w, p) in &self.sectors {
            let n = p.len() - 1;
            let side = |x: f64, mask: usize| -> Vec<f64> {
                let xp = if mask & 1 != 0 { x } else { 1.0 };
                let xm = if mask & 2 != 0 { x } else { 1.0 };
                (0..=n).map(|i| xp.powi(i as i32) * xm.powi((n - i) as i32)).collect()
            };
            let us: Vec<Vec<f64>> = (0..4).map(|m| side(xa, m)).collect();
            for mb in 0..4 {
                let v = side(xb, mb);
                let pv: Vec<f64> = p.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
                for (ma, u) in us.iter().enumerate() {
                    g[ma][mb] += w * u.iter().zip(&pv).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        // Silence probability of each subset, including noise.
        let mut silent = [[0.0; 4]; 4];
        for ma in 0..4 {
            for mb in 0..4 {
                let k = (ma as u32).count_ones() + (mb as u32).count_ones();
                silent[ma][mb] = q.powi(k as i32) * g[ma][mb];
            }
        }
        // Inclusion–exclusion over the clicking detectors.
        let clicks_of = |outcome: usize| -> usize {
            match outcome {
                0 => 0,
                1 => 1,
                2 => 2,
                _ => 3,
            }
        };
        let mut out = [[0.0; 4]; 4];
        for (oa, row) in out.iter_mut().enumerate() {
            for (ob, cell) in row.iter_mut().enumerate() {
                let (ca, cb) = (clicks_of(oa), clicks_of(ob));
                let (sa, sb) = (3 & !ca, 3 & !cb);
                let mut acc = 0.0;
                for va in subsets(ca) {
                    for vb in subsets(cb) {
                        let sign = if ((va as u32).count_ones() + (vb as u32).count_ones()) % 2 == 0 {
                            1.0
                        } else {
                            -1.0
                        };
                        acc += sign * silent[sa | va][sb | vb];
                    }
                }
                *cell = acc.max(0.0);
            }
        }
        out
    }
}

fn subsets(mask: usize) -> impl Iterator<Item = usize> {
    (0..4).filter(move |s| s & !mask == 0)
}

/// Numerator and denominator of the squashed correlation for one pattern table.
fn squashed(p: &[[f64; 4]; 4]) -> (f64, f64) {
    let value = [0.0, 1.0, -1.0, 0.0];
    let mut num = 0.0;
    let mut den = 0.0;
    for oa in 1..4 {
        for ob in 1..4 {
            num += value[oa] * value[ob] * p[oa][ob];
            den += p[oa][ob];
        }
    }
    (num, den)
}

/// Loss-independent model of an experiment at all four CHSH settings.
#[derive(Debug, Clone)]
pub struct ChshModel {
    experiment: DvExperiment,
    settings: Vec<(SettingModel, f64)>,
}

impl ChshModel {
    pub fn new(experiment: &DvExperiment) -> Result<Self> {
        experiment.validate()?;
        let cutoff = match experiment.source {
            DvSource::Bell => 1,
            DvSource::Pdc { xi } => {
                let cutoff = match experiment.fock_cutoff {
                    Some(c) => c,
                    None => required_cutoff(xi, AUTO_CUTOFF_TAIL)?,
                };
                let kept: f64 = sector_weights(experiment.source, cutoff).iter().map(|w| w.1).sum();
                if kept < 1.0 - CUTOFF_TOLERANCE {
                    return Err(Error::CutoffInsufficient { tail: 1.0 - kept });
                }
                cutoff
            }
        };
        let settings = experiment
            .angles
            .terms()
            .iter()
            .map(|&((ta, tb), sign)| (SettingModel::new(experiment.source, cutoff, ta, tb), sign))
            .collect();
        Ok(Self {
            experiment: *experiment,
            settings,
        })
    }

    fn terms(&self, t_a: f64, t_b: f64) -> [(f64, f64); 4] {
        let mut out = [(0.0, 0.0); 4];
        for (o, (m, _)) in out.iter_mut().zip(&self.settings) {
            *o = squashed(&m.patterns(t_a, t_b, self.experiment.noise_mean));
        }
        out
    }

    /// CHSH parameter for fixed arm transmittances.
    pub fn chsh_given_transmittances(&self, t_a: f64, t_b: f64) -> f64 {
        let terms = self.terms(t_a, t_b);
        self.settings
            .iter()
            .zip(terms)
            .map(|((_, sign), (n, d))| if d > 0.0 { sign * n / d } else { 0.0 })
            .sum::<f64>()
            .abs()
    }
}

/// Click-pattern probabilities for fixed arm transmittances, indexed
/// `[side A outcome][side B outcome]` with outcomes
/// 0 = no click, 1 = only `+`, 2 = only `−`, 3 = both.
pub fn click_patterns(
    exp: &DvExperiment,
    t_a: f64,
    t_b: f64,
    angles: (f64, f64),
) -> Result<[[f64; 4]; 4]> {
    exp.validate()?;
    let cutoff = match exp.source {
        DvSource::Bell => 1,
        DvSource::Pdc { xi } => exp.fock_cutoff.map_or_else(|| required_cutoff(xi, AUTO_CUTOFF_TAIL), Ok)?,
    };
    Ok(SettingModel::new(exp.source, cutoff, angles.0, angles.1).patterns(t_a, t_b, exp.noise_mean))
}

/// Squashed correlation `E(θ_A, θ_B)` for channel transmittances `(η₀, η_τ)`
/// at zero storage time.
pub fn correlation_given_eta(exp: &DvExperiment, eta0: f64, eta_tau: f64, angles: (f64, f64)) -> Result<f64> {
    correlation_given_eta_at(exp, eta0, eta_tau, angles, 0.0)
}

/// As [`correlation_given_eta`] with the memory held for the time that
/// corresponds to `shift`.
pub fn correlation_given_eta_at(
    exp: &DvExperiment,
    eta0: f64,
    eta_tau: f64,
    angles: (f64, f64),
    shift: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta0) || !(0.0..=1.0).contains(&eta_tau) {
        return Err(invalid("transmittances must lie in [0, 1]"));
    }
    ChshModel::new(exp)?;
    let (ta, tb) = exp.arm_transmittances(eta0, eta_tau, shift);
    let (n, d) = squashed(&click_patterns(exp, ta, tb, angles)?);
    Ok(if d > 0.0 { (n / d).clamp(-1.0, 1.0) } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    pub b: f64,
    pub stderr: f64,
}

/// CHSH parameter with click probabilities averaged over the `(η₀, η_s)`
/// pairs of `samples`; the standard error follows by the delta method.
pub fn chsh_parameter(exp: &DvExperiment, samples: &SampleSet, shift: f64) -> Result<ChshEstimate> {
    let model = ChshModel::new(exp)?;
    chsh_with_model(&model, samples, shift)
}

fn chsh_with_model(model: &ChshModel, samples: &SampleSet, shift: f64) -> Result<ChshEstimate> {
    if samples.is_empty() {
        return Err(invalid("no samples"));
    }
    let k = samples.shift_index(shift)?;
    let exp = &model.experiment;
    let pairs: Vec<(f64, f64)> = samples.pairs(k).collect();
    let per: Vec<[(f64, f64); 4]> = pairs
        .par_iter()
        .map(|&(e0, es)| {
            let (ta, tb) = exp.arm_transmittances(e0, es, shift);
            model.terms(ta, tb)
        })
        .collect();
    let nf = per.len() as f64;
    let mut mean = [(0.0, 0.0); 4];
    for t in &per {
        for (m, v) in mean.iter_mut().zip(t) {
            m.0 += v.0;
            m.1 += v.1;
        }
    }
    for m in &mut mean {
        m.0 /= nf;
        m.1 /= nf;
    }
    let e: Vec<f64> = mean
        .iter()
        .map(|(n, d)| if *d > 0.0 { n / d } else { 0.0 })
        .collect();
    let signed: f64 = model.settings.iter().zip(&e).map(|((_, s), e)| s * e).sum();
    let b = signed.abs();
    let orient = if signed < 0.0 { -1.0 } else { 1.0 };
    let stderr = if per.len() < 2 {
        0.0
    } else {
        let psi: Vec<f64> = per
            .iter()
            .map(|t| {
                orient
                    * model
                        .settings
                        .iter()
                        .zip(t.iter().zip(mean.iter().zip(&e)))
                        .map(|((_, s), ((n, d), ((_, dm), ek)))| {
                            if *dm > 0.0 {
                                s * (n - ek * d) / dm
                            } else {
                                0.0
                            }
                        })
                        .sum::<f64>()
            })
            .collect();
        let mu = psi.iter().sum::<f64>() / nf;
        let var = psi.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (nf - 1.0);
        (var / nf).sqrt()
    };
    Ok(ChshEstimate { b, stderr })
}

/// Maximum of the PDT-averaged CHSH parameter over the multipair squeezing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshMaximum {
    pub b_max: f64,
    pub xi_star: f64,
    pub stderr: f64,
    /// The coarse maximum sat at an end of the grid.
    pub at_grid_edge: bool,
}

/// Coarse search over `xi_grid` followed by golden-section refinement in the
/// cells adjacent to the best grid point.
pub fn chsh_max_over_xi(
    template: &DvExperiment,
    samples: &SampleSet,
    shift: f64,
    xi_grid: &[f64],
) -> Result<ChshMaximum> {
    if xi_grid.len() < 2 || xi_grid.windows(2).any(|w| !(w[1] > w[0])) || xi_grid[0] < 0.0 {
        return Err(invalid("xi grid must hold at least two increasing non-negative values"));
    }
    let eval = |xi: f64| -> Result<ChshEstimate> {
        let model = ChshModel::new(&template.with_xi(xi))?;
        chsh_with_model(&model, samples, shift)
    };
    let coarse: Vec<ChshEstimate> = xi_grid.iter().map(|&x| eval(x)).collect::<Result<_>>()?;
    let (best, _) = coarse
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, e)| if e.b > acc.1 { (i, e.b) } else { acc });
    let at_grid_edge = best == 0 || best + 1 == xi_grid.len();
    let lo = xi_grid[best.saturating_sub(1)];
    let hi = xi_grid[(best + 1).min(xi_grid.len() - 1)];
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let tol = 1e-5 * (hi - lo).max(1e-12);
    while (b - a) > tol {
        if fc.b >= fd.b {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = eval(d)?;
        }
    }
    let mut result = ChshMaximum {
        b_max: coarse[best].b,
        xi_star: xi_grid[best],
        stderr: coarse[best].stderr,
        at_grid_edge,
    };
    for (x, f) in [(c, fc), (d, fd)] {
        if f.b > result.b_max {
            result.b_max = f.b;
            result.xi_star = x;
            result.stderr = f.stderr;
        }
    }
    if at_grid_edge {
        log::warn!("CHSH maximum at the edge of the squeezing grid; consider widening it");
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_matrices_are_orthogonal() {
        for u in rotation_matrices(12, 0.37) {
            let n = u.len();
            for a in 0..n {
                for b in 0..n {
                    let dot: f64 = (0..n).map(|i| u[i][a] * u[i][b]).sum();
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ideal_singlet_correlation() {
        let exp = DvExperiment::ideal(DvSource::Bell);
        for &(ta, tb) in &[(0.0, 0.3), (0.2, 1.1), (1.0, -0.4)] {
            let e = correlation_given_eta(&exp, 1.0, 1.0, (ta, tb)).unwrap();
            assert!((e + (2.0 * (ta - tb)).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn tsirelson_bound() {
        let model = ChshModel::new(&DvExperiment::ideal(DvSource::Bell)).unwrap();
        assert!((model.chsh_given_transmittances(1.0, 1.0) - 2.0 * 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn noise_only_gives_zero() {
        let exp = DvExperiment {
            noise_mean: 0.01,
            ..DvExperiment::ideal(DvSource::Bell)
        };
        assert!(correlation_given_eta(&exp, 0.0, 0.0, (0.0, PI / 8.0)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn patterns_sum_to_one() {
        let exp = DvExperiment {
            noise_mean: 0.02,
            fock_cutoff: Some(20),
            ..DvExperiment::ideal(DvSource::Pdc { xi: 0.4 })
        };
        let p = click_patterns(&exp, 0.3, 0.6, (0.1, 0.7)).unwrap();
        let total: f64 = p.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cutoff_too_small() {
        let exp = DvExperiment {
            fock_cutoff: Some(2),
            ..DvExperiment::ideal(DvSource::Pdc { xi: 1.0 })
        };
        assert!(matches!(ChshModel::new(&exp), Err(Error::CutoffInsufficient { .. })));
    }

    #[test]
    fn required_cutoff_grows() {
        assert!(required_cutoff(0.1, 1e-10).unwrap() < required_cutoff(0.8, 1e-10).unwrap());
    }

    #[test]
    fn memory_on_selected_arm() {
        let exp = DvExperiment {
            memory_decay_db_per_ms: 3.0,
            wind_v: 10.0,
            ..DvExperiment::ideal(DvSource::Bell)
        };
        let (ta, tb) = exp.arm_transmittances(1.0, 1.0, 0.01);
        assert!((ta - 10f64.powf(-0.3)).abs() < 1e-15);
        assert_eq!(tb, 1.0);
    }
}
