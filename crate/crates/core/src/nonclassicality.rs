//! Photocounting nonclassicality of an amplitude-squeezed coherent state
//! after adaptive selection: Mandel Q, click statistics of `N` on-off
//! detectors, the binomial Q parameter and a linear-programming witness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seed::derive_seed;
use crate::statistics::SampleSet;

/// Largest neglected probability accepted for a truncated photon-number
/// distribution.
pub const FOCK_TAIL_TOLERANCE: f64 = 1e-10;
const MAX_CUTOFF: usize = 2000;

/// `D(α₀) S(ξ) |0⟩` with real `α₀`, squeezed along the amplitude quadrature
/// with strength `|ξ|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedCoherentState {
    pub alpha0: f64,
    pub xi: f64,
}

impl SqueezedCoherentState {
    pub fn new(alpha0: f64, xi: f64) -> Result<Self> {
        if !(alpha0.is_finite() && xi.is_finite()) {
            return Err(invalid("state parameters must be finite"));
        }
        Ok(Self { alpha0, xi })
    }

    /// `α₀² + sinh²ξ`.
    pub fn mean_photon_number(&self) -> f64 {
        self.alpha0.powi(2) + self.xi.sinh().powi(2)
    }

    /// `α₀² e^{−2|ξ|} + 2 sinh²ξ cosh²ξ`.
    pub fn photon_number_variance(&self) -> f64 {
        let r = self.xi.abs();
        self.alpha0.powi(2) * (-2.0 * r).exp() + 2.0 * (r.sinh() * r.cosh()).powi(2)
    }

    pub fn mandel_q(&self) -> f64 {
        self.photon_number_variance() / self.mean_photon_number() - 1.0
    }

    /// Number amplitudes `⟨n|α₀, ξ⟩` for `n = 0..=cutoff`, from the
    /// three-term recurrence implied by
    /// `[(a − α₀) cosh r + (a† − α₀) sinh r] |α₀, ξ⟩ = 0`.
    pub fn amplitudes(&self, cutoff: usize) -> Vec<f64> {
        let r = self.xi.abs();
        let a = self.alpha0;
        let (ch, th) = (r.cosh(), r.tanh());
        let drive = a * r.exp() / ch;
        let mut c = Vec::with_capacity(cutoff + 1);
        c.push((-0.5 * a * a * (1.0 + th)).exp() / ch.sqrt());
        for m in 0..cutoff {
            let prev = if m >= 1 { c[m - 1] } else { 0.0 };
            let next = (drive * c[m] - th * (m as f64).sqrt() * prev) / ((m + 1) as f64).sqrt();
            c.push(next);
        }
        c
    }

    /// Smallest cutoff with a neglected probability below `tail`.
    pub fn cutoff_for_tail(&self, tail: f64) -> Result<usize> {
        let amps = self.amplitudes(MAX_CUTOFF);
        let mut acc = 0.0;
        for (n, c) in amps.iter().enumerate() {
            acc += c * c;
            if 1.0 - acc <= tail {
                return Ok(n);
            }
        }
        Err(Error::CutoffInsufficient { tail: 1.0 - acc })
    }
}

/// Photon-number distribution of `state` truncated at `cutoff`.
pub fn input_pnd(state: &SqueezedCoherentState, cutoff: usize) -> Result<Vec<f64>> {
    let p: Vec<f64> = state.amplitudes(cutoff).iter().map(|c| c * c).collect();
    let tail = 1.0 - p.iter().sum::<f64>();
    if tail > FOCK_TAIL_TOLERANCE {
        return Err(Error::CutoffInsufficient { tail });
    }
    Ok(p)
}

/// Photon-number distribution after a pure loss of transmittance `eta`.
pub fn lossy_pnd(p_in: &[f64], eta: f64) -> Vec<f64> {
    let mut out = vec![0.0; p_in.len()];
    accumulate_lossy(p_in, eta, 1.0, &mut out);
    out
}

/// Adds `weight · lossy_pnd(p_in, eta)` to `out`. Binomial rows are built
/// by Pascal's rule so that no powers of small numbers are formed.
fn accumulate_lossy(p_in: &[f64], eta: f64, weight: f64, out: &mut [f64]) {
    if eta >= 1.0 {
        for (o, p) in out.iter_mut().zip(p_in) {
            *o += weight * p;
        }
        return;
    }
    if eta <= 0.0 {
        out[0] += weight * p_in.iter().sum::<f64>();
        return;
    }
    let mut row = vec![0.0; p_in.len()];
    row[0] = 1.0;
    for (n, &p) in p_in.iter().enumerate() {
        if n > 0 {
            for m in (1..=n).rev() {
                row[m] = (1.0 - eta) * row[m] + eta * row[m - 1];
            }
            row[0] *= 1.0 - eta;
        }
        if p != 0.0 {
            for m in 0..=n {
                out[m] += weight * p * row[m];
            }
        }
    }
}

/// Photon-number distribution averaged over the records with `η₀ ≥ eta_min`,
/// each transmitted with `t_det · η_shift`.
pub fn selected_pnd(
    p_in: &[f64],
    samples: &SampleSet,
    eta_min: f64,
    shift: f64,
    t_det: f64,
) -> Result<Vec<f64>> {
    let (p, _) = selected_pnd_with_count(p_in, samples, eta_min, shift, t_det)?;
    Ok(p)
}

fn selected_pnd_with_count(
    p_in: &[f64],
    samples: &SampleSet,
    eta_min: f64,
    shift: f64,
    t_det: f64,
) -> Result<(Vec<f64>, usize)> {
    if !(0.0..1.0).contains(&eta_min) {
        return Err(invalid(format!("eta_min must lie in [0, 1), got {eta_min}")));
    }
    if !(0.0..=1.0).contains(&t_det) {
        return Err(invalid("deterministic transmittance must lie in [0, 1]"));
    }
    let k = samples.shift_index(shift)?;
    let selected: Vec<f64> = samples
        .pairs(k)
        .filter(|(e0, _)| *e0 >= eta_min)
        .map(|(_, es)| t_det * es)
        .collect();
    if selected.is_empty() {
        return Err(Error::EmptySelection { survivors: 0 });
    }
    let mut out = vec![0.0; p_in.len()];
    let w = 1.0 / selected.len() as f64;
    for t in &selected {
        accumulate_lossy(p_in, *t, w, &mut out);
    }
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    Ok((out, selected.len()))
}

fn mean_and_variance(p: &[f64]) -> (f64, f64) {
    let total: f64 = p.iter().sum();
    let mean = p.iter().enumerate().map(|(n, q)| n as f64 * q).sum::<f64>() / total;
    let var = p
        .iter()
        .enumerate()
        .map(|(n, q)| (n as f64 - mean).powi(2) * q)
        .sum::<f64>()
        / total;
    (mean, var)
}

/// `⟨Δn²⟩/⟨n⟩ − 1`.
pub fn mandel_q(p: &[f64]) -> Result<f64> {
    let (mean, var) = mean_and_variance(p);
    if !(mean > 0.0) {
        return Err(Error::UndefinedStatistic("Mandel Q of a distribution with zero mean".into()));
    }
    Ok(var / mean - 1.0)
}

/// Click-number POVM of `N` on-off detectors in the photon-number basis,
/// `[n][m]` = probability of `n` clicks given `m` photons.
///
/// Computed by distributing photons one at a time over the detectors: the
/// `m`-th photon lands on an already triggered detector with probability
/// `n/N`.
pub fn click_povm_fock(n_detectors: usize, cutoff: usize) -> Result<Vec<Vec<f64>>> {
    if n_detectors == 0 {
        return Err(invalid("at least one detector is required"));
    }
    let nd = n_detectors as f64;
    let mut pi = vec![vec![0.0; cutoff + 1]; n_detectors + 1];
    pi[0][0] = 1.0;
    for m in 1..=cutoff {
        for n in 0..=n_detectors {
            let stay = pi[n][m - 1] * n as f64 / nd;
            let grow = if n > 0 {
                pi[n - 1][m - 1] * (nd - n as f64 + 1.0) / nd
            } else {
                0.0
            };
            pi[n][m] = stay + grow;
        }
    }
    Ok(pi)
}

/// Coherent-state click probabilities `Π(n | |α|²)` for `n = 0..=N`.
pub fn coherent_clicks(n_detectors: usize, intensity: f64) -> Vec<f64> {
    let x = if intensity.is_infinite() {
        1.0
    } else {
        -(-intensity / n_detectors as f64).exp_m1()
    };
    bernstein_basis(n_detectors, x)
}

/// `C(N, n) xⁿ (1 − x)^{N−n}` for `n = 0..=N`.
fn bernstein_basis(n: usize, x: f64) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    for k in 1..=n {
        for j in (1..=k).rev() {
            b[j] = (1.0 - x) * b[j] + x * b[j - 1];
        }
        b[0] *= 1.0 - x;
    }
    b
}

/// Click distribution of `N` detectors for photon-number distribution `p`.
pub fn click_distribution(p: &[f64], n_detectors: usize) -> Result<Vec<f64>> {
    if p.is_empty() {
        return Err(invalid("empty photon-number distribution"));
    }
    let pi = click_povm_fock(n_detectors, p.len() - 1)?;
    let mut out: Vec<f64> = pi
        .iter()
        .map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum())
        .collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    Ok(out)
}

/// `N ⟨Δc²⟩ / (⟨c⟩ (N − ⟨c⟩)) − 1`.
pub fn binomial_q(clicks: &[f64], n_detectors: usize) -> Result<f64> {
    if clicks.len() != n_detectors + 1 {
        return Err(invalid("click distribution must have N + 1 entries"));
    }
    let (mean, var) = mean_and_variance(clicks);
    let nd = n_detectors as f64;
    let denom = mean * (nd - mean);
    if !(denom > 1e-300) {
        return Err(Error::UndefinedStatistic(format!(
            "binomial Q needs 0 < ⟨c⟩ < N, got ⟨c⟩ = {mean}"
        )));
    }
    Ok(nd * var / denom - 1.0)
}

/// Radial grid of coherent intensities `|α|²` for the witness: zero and
/// `points` log-spaced values up to where all detectors click with
/// probability above `1 − 10⁻⁶`.
pub fn default_alpha_grid(n_detectors: usize, points: usize) -> Vec<f64> {
    let nd = n_detectors as f64;
    let a_max = nd * (1.0 - (1.0 - 1e-7f64).powf(1.0 / nd)).ln().abs();
    let a_min: f64 = 1e-4;
    let mut grid = vec![0.0];
    let (l0, l1) = (a_min.ln(), a_max.ln());
    for i in 0..points {
        grid.push((l0 + (l1 - l0) * i as f64 / (points - 1).max(1) as f64).exp());
    }
    grid
}

/// Optimal linear witness of click nonclassicality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// `Σ λ(n) P(n) − sup_α Σ λ(n) Π(n|α)`; positive values certify
    /// nonclassicality.
    pub violation: f64,
    /// Coefficients `λ(n) ∈ [−1, 1]`.
    pub lambda: Vec<f64>,
    /// `sup_α Σ λ(n) Π(n|α)` for the returned coefficients.
    pub classical_bound: f64,
    /// Intensities added by the continuous refinement.
    pub refinement_points: usize,
}

impl Witness {
    /// Violation of the same inequality for another click distribution.
    pub fn evaluate(&self, clicks: &[f64]) -> f64 {
        dot(&self.lambda, clicks) - self.classical_bound
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Supremum over all coherent intensities of `Σ λ(n) Π(n|α)`, with the
/// maximising click probability `x = 1 − e^{−|α|²/N}`. In `x` the objective
/// is a Bernstein polynomial on `[0, 1]`.
fn coherent_supremum(lambda: &[f64]) -> (f64, f64) {
    let n = lambda.len() - 1;
    let f = |x: f64| dot(lambda, &bernstein_basis(n, x));
    const SCAN: usize = 4096;
    let values: Vec<f64> = (0..=SCAN).map(|i| f(i as f64 / SCAN as f64)).collect();
    let mut best = (values[0], 0.0);
    for (i, &v) in values.iter().enumerate() {
        if v > best.0 {
            best = (v, i as f64 / SCAN as f64);
        }
    }
    // Refine every local maximum of the scan, not only the largest one.
    for i in 0..=SCAN {
        let left = if i > 0 { values[i - 1] } else { f64::NEG_INFINITY };
        let right = if i < SCAN { values[i + 1] } else { f64::NEG_INFINITY };
        if values[i] < left || values[i] < right || values[i] < best.0 - 1e-3 {
            continue;
        }
        let lo = i.saturating_sub(1) as f64 / SCAN as f64;
        let hi = (i + 1).min(SCAN) as f64 / SCAN as f64;
        let (v, x) = golden_max(&f, lo, hi);
        if v > best.0 {
            best = (v, x);
        }
    }
    best
}

fn golden_max(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-15 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (fc, c)
    } else {
        (fd, d)
    }
}

/// Maximal violation of the click-statistics inequalities over
/// `λ ∈ [−1, 1]^{N+1}`.
///
/// Solves the linear program
/// `max Σ λ(n) P(n) − t  s.t.  Σ λ(n) Π(n|A_k) ≤ t` over the intensities
/// `A_k` of `alpha_grid` and `A = ∞`, then repeatedly adds the intensity
/// that maximises the left side over the continuum until no constraint is
/// violated. The reported violation uses the exact supremum for the final
/// coefficients, so it never overstates nonclassicality.
pub fn witness_violation(clicks: &[f64], n_detectors: usize, alpha_grid: &[f64]) -> Result<Witness> {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};

    if clicks.len() != n_detectors + 1 {
        return Err(invalid("click distribution must have N + 1 entries"));
    }
    if alpha_grid.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(invalid("intensity grid values must be finite and non-negative"));
    }
    let mut columns: Vec<Vec<f64>> = alpha_grid
        .iter()
        .map(|&a| coherent_clicks(n_detectors, a))
        .collect();
    columns.push(coherent_clicks(n_detectors, f64::INFINITY));
    let mut added = 0;
    loop {
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let lambda: Vec<_> = clicks.iter().map(|&p| lp.add_var(p, (-1.0, 1.0))).collect();
        let t = lp.add_var(-1.0, (f64::NEG_INFINITY, f64::INFINITY));
        for col in &columns {
            let mut expr: Vec<_> = lambda.iter().zip(col).map(|(&v, &c)| (v, c)).collect();
            expr.push((t, -1.0));
            lp.add_constraint(expr, ComparisonOp::Le, 0.0);
        }
        let sol = lp
            .solve()
            .map_err(|e| Error::Internal(format!("witness linear program failed: {e}")))?;
        let lam: Vec<f64> = lambda.iter().map(|&v| sol[v]).collect();
        let t_val = sol[t];
        let (continuous, x) = coherent_supremum(&lam);
        if continuous <= t_val + 1e-10 || added >= 200 {
            let sup = columns.iter().map(|c| dot(&lam, c)).fold(continuous, f64::max);
            return Ok(Witness {
                violation: dot(&lam, clicks) - sup,
                lambda: lam,
                classical_bound: sup,
                refinement_points: added,
            });
        }
        columns.push(bernstein_basis(n_detectors, x));
        added += 1;
    }
}

/// First shift at which a series, negative at the start, reaches zero,
/// by linear interpolation. `None` when it stays negative.
pub fn first_nonnegative_crossing(shifts: &[f64], values: &[f64]) -> Option<f64> {
    if values.first().map_or(true, |v| *v >= 0.0) {
        return shifts.first().copied().filter(|_| !values.is_empty());
    }
    for i in 1..values.len() {
        if values[i] >= 0.0 {
            let (s0, s1) = (shifts[i - 1], shifts[i]);
            let (v0, v1) = (values[i - 1], values[i]);
            return Some(s0 + (0.0 - v0) / (v1 - v0) * (s1 - s0));
        }
    }
    None
}

/// Options of [`selection_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanOptions {
    /// Selected events behind each confidence interval.
    #[serde(default = "default_events")]
    pub events: u64,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default = "default_grid_points")]
    pub alpha_grid_points: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_events() -> u64 {
    1_000_000
}

fn default_resamples() -> usize {
    1000
}

fn default_grid_points() -> usize {
    400
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            events: default_events(),
            resamples: default_resamples(),
            alpha_grid_points: default_grid_points(),
            seed: 0,
        }
    }
}

/// Statistic with a 95 % resampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub shift: f64,
    pub n_detectors: usize,
    pub survivors: usize,
    pub mandel_q: Interval,
    pub binomial_q: Interval,
    pub violation: Interval,
    /// `⟨n⟩_in/|Q_in| − ⟨η²⟩/⟨Δη²⟩` over the selected records; the Mandel
    /// parameter of the received light is positive where this is positive.
    pub moment_criterion: f64,
}

fn multinomial(p: &[f64], events: u64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut left = events;
    let mut rest = 1.0;
    let mut out = vec![0.0; p.len()];
    for (i, &q) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        let k = if i + 1 == p.len() || rest <= 0.0 {
            left
        } else {
            let prob = (q / rest).clamp(0.0, 1.0);
            Binomial::new(left, prob).map(|b| b.sample(rng)).unwrap_or(0)
        };
        out[i] = k as f64 / events as f64;
        left -= k;
        rest -= q;
    }
    out
}

fn percentile_interval(value: f64, mut draws: Vec<f64>) -> Interval {
    draws.retain(|v| v.is_finite());
    if draws.is_empty() {
        return Interval {
            value,
            lower: value,
            upper: value,
        };
    }
    draws.sort_by(f64::total_cmp);
    let at = |q: f64| draws[((q * (draws.len() - 1) as f64).round() as usize).min(draws.len() - 1)];
    Interval {
        value,
        lower: at(0.025),
        upper: at(0.975),
    }
}

/// Mandel Q, binomial Q and witness violation of the selected light at every
/// shift and detector count, with resampling intervals.
pub fn selection_scan(
    state: &SqueezedCoherentState,
    samples: &SampleSet,
    eta_min: f64,
    shifts: &[f64],
    detector_counts: &[usize],
    t_det: f64,
    options: &ScanOptions,
) -> Result<Vec<ScanRow>> {
    let cutoff = state.cutoff_for_tail(1e-13)?;
    let p_in = input_pnd(state, cutoff)?;
    let n_in = state.mean_photon_number();
    let q_in = state.mandel_q();
    let cells: Vec<(usize, f64, usize)> = shifts
        .iter()
        .flat_map(|&s| detector_counts.iter().map(move |&n| (s, n)))
        .enumerate()
        .map(|(i, (s, n))| (i, s, n))
        .collect();
    cells
        .par_iter()
        .map(|&(cell, shift, nd)| {
            let (p_sel, survivors) = selected_pnd_with_count(&p_in, samples, eta_min, shift, t_det)?;
            let k = samples.shift_index(shift)?;
            let etas: Vec<f64> = samples
                .pairs(k)
                .filter(|(e0, _)| *e0 >= eta_min)
                .map(|(_, es)| es)
                .collect();
            let m1 = etas.iter().sum::<f64>() / etas.len() as f64;
            let m2 = etas.iter().map(|e| e * e).sum::<f64>() / etas.len() as f64;
            let var = m2 - m1 * m1;
            let moment_criterion = if var > 0.0 {
                n_in / q_in.abs() - m2 / var
            } else {
                f64::NEG_INFINITY
            };

            let clicks = click_distribution(&p_sel, nd)?;
            let q = mandel_q(&p_sel)?;
            let qn = binomial_q(&clicks, nd)?;
            let witness = witness_violation(&clicks, nd, &default_alpha_grid(nd, options.alpha_grid_points))?;

            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(options.seed, cell as u64));
            let mut q_draws = Vec::with_capacity(options.resamples);
            let mut qn_draws = Vec::with_capacity(options.resamples);
            let mut v_draws = Vec::with_capacity(options.resamples);
            for _ in 0..options.resamples {
                let pr = multinomial(&p_sel, options.events, &mut rng);
                q_draws.push(mandel_q(&pr).unwrap_or(f64::NAN));
                let cr = multinomial(&clicks, options.events, &mut rng);
                qn_draws.push(binomial_q(&cr, nd).unwrap_or(f64::NAN));
                v_draws.push(witness.evaluate(&cr));
            }
            Ok(ScanRow {
                shift,
                n_detectors: nd,
                survivors,
                mandel_q: percentile_interval(q, q_draws),
                binomial_q: percentile_interval(qn, qn_draws),
                violation: percentile_interval(witness.violation, v_draws),
                moment_criterion,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson(mean: f64, cutoff: usize) -> Vec<f64> {
        let mut p = vec![(-mean).exp()];
        for n in 1..=cutoff {
            let prev = p[n - 1];
            p.push(prev * mean / n as f64);
        }
        p
    }

    #[test]
    fn coherent_limit_is_poisson() {
        let s = SqueezedCoherentState::new(1.3, 0.0).unwrap();
        let p = input_pnd(&s, 40).unwrap();
        for (a, b) in p.iter().zip(poisson(1.69, 40)) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn squeezed_vacuum_has_even_support() {
        let s = SqueezedCoherentState::new(0.0, 0.7).unwrap();
        let p = input_pnd(&s, 120).unwrap();
        for (n, v) in p.iter().enumerate() {
            if n % 2 == 1 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn moments_match_closed_form() {
        let s = SqueezedCoherentState::new(1.15, 0.59).unwrap();
        let p = input_pnd(&s, s.cutoff_for_tail(1e-14).unwrap()).unwrap();
        let (mean, var) = mean_and_variance(&p);
        assert!((mean - s.mean_photon_number()).abs() < 1e-10);
        assert!((var - s.photon_number_variance()).abs() < 1e-9);
        assert!((mandel_q(&p).unwrap() - s.mandel_q()).abs() < 1e-9);
        assert!((s.mandel_q() + 0.129).abs() < 1e-3);
    }

    #[test]
    fn cutoff_too_small() {
        let s = SqueezedCoherentState::new(3.0, 0.5).unwrap();
        assert!(matches!(input_pnd(&s, 5), Err(Error::CutoffInsufficient { .. })));
    }

    #[test]
    fn loss_limits() {
        let p = poisson(2.0, 50);
        assert_eq!(lossy_pnd(&p, 1.0), p);
        let zero = lossy_pnd(&p, 0.0);
        assert!((zero[0] - p.iter().sum::<f64>()).abs() < 1e-15);
        for (a, b) in lossy_pnd(&p, 0.3).iter().zip(poisson(0.6, 50)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn povm_columns() {
        let pi = click_povm_fock(4, 30).unwrap();
        assert_eq!(pi[0][0], 1.0);
        for m in 0..=30 {
            let s: f64 = (0..=4).map(|n| pi[n][m]).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(pi[1][1], 1.0);
    }

    #[test]
    fn undefined_statistics() {
        assert!(mandel_q(&[1.0, 0.0]).is_err());
        assert!(binomial_q(&[0.0, 0.0, 1.0], 2).is_err());
        assert!(binomial_q(&[1.0, 0.0, 0.0], 2).is_err());
        assert_eq!(mandel_q(&[0.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn coherent_column_is_classical() {
        let grid = default_alpha_grid(3, 400);
        let w = witness_violation(&coherent_clicks(3, grid[57]), 3, &grid).unwrap();
        assert!(w.violation <= 1e-9, "{w:?}");
    }

    #[test]
    fn crossing_helper() {
        assert_eq!(first_nonnegative_crossing(&[0.0, 1.0, 2.0], &[-1.0, -0.5, 0.5]), Some(1.5));
        assert_eq!(first_nonnegative_crossing(&[0.0, 1.0], &[-1.0, -0.5]), None);
    }
}
