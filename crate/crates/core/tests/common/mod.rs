//! Reference implementations used only by the integration tests. None of
//! them share code with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48)
}

/// `∫ f(κ) dκ` over `[a, b]` on a logarithmic variable, split into decades.
pub fn log_integral(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (la, lb) = (a.ln(), b.ln());
    let pieces = ((lb - la) / 2.0).ceil().max(1.0) as usize;
    let g = |u: f64| {
        let k = u.exp();
        k * f(k)
    };
    let mut total = 0.0;
    for i in 0..pieces {
        let u0 = la + (lb - la) * i as f64 / pieces as f64;
        let u1 = la + (lb - la) * (i + 1) as f64 / pieces as f64;
        let scale = g(0.5 * (u0 + u1)).abs().max(1e-300) * (u1 - u0);
        total += adaptive_simpson(&g, u0, u1, rel_tol * scale);
    }
    total
}

/// `J₀` by its integral representation.
pub fn bessel_j0_integral(x: f64) -> f64 {
    adaptive_simpson(&|t: f64| (x * t.sin()).cos(), 0.0, PI, 1e-13) / PI
}

/// `J₀` from the classic rational and asymptotic fits, absolute error about
/// 1e-8. Cheap enough to sit inside an outer quadrature.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 8.0 {
        let y = x * x;
        let num = 57568490574.0
            + y * (-13362590354.0 + y * (651619640.7 + y * (-11214424.18 + y * (77392.33017 + y * -184.9052456))));
        let den = 57568490411.0 + y * (1029532985.0 + y * (9494680.718 + y * (59272.64853 + y * (267.8532712 + y))));
        num / den
    } else {
        let z = 8.0 / ax;
        let y = z * z;
        let xx = ax - 0.785398164;
        let p = 1.0 + y * (-0.1098628627e-2 + y * (0.2734510407e-4 + y * (-0.2073370639e-5 + y * 0.2093887211e-6)));
        let q = -0.1562499995e-1
            + y * (0.1430488765e-3 + y * (-0.6911147651e-5 + y * (0.7621095161e-6 - y * 0.934935152e-7)));
        (0.636619772 / ax).sqrt() * (xx.cos() * p - z * xx.sin() * q)
    }
}

/// Modified von Kármán spectrum with the Kolmogorov prefactor.
pub fn von_karman(kappa: f64, cn2: f64, l0: f64, big_l0: f64) -> f64 {
    let km = 5.92 / l0;
    let k0 = 2.0 * PI / big_l0;
    0.033 * cn2 * (-(kappa * kappa) / (km * km)).exp() / (kappa * kappa + k0 * k0).powf(11.0 / 6.0)
}

/// Phase structure function of a slab of thickness `dz`:
/// `8π² k² dz ∫ κ Φ(κ) [1 − J₀(κ r)] dκ` over the band `[kmin, kmax]`.
pub fn structure_function(r: f64, k: f64, dz: f64, cn2: f64, l0: f64, big_l0: f64, kmin: f64, kmax: f64) -> f64 {
    let f = |kappa: f64| kappa * von_karman(kappa, cn2, l0, big_l0) * (1.0 - bessel_j0(kappa * r));
    8.0 * PI * PI * k * k * dz * log_integral(&f, kmin, kmax, 1e-8)
}

/// Gaussian beam radius after `z` for waist `w0` and wavefront radius `f0`.
pub fn gaussian_radius(w0: f64, f0: Option<f64>, k: f64, z: f64) -> f64 {
    let focus = f0.map_or(1.0, |f| 1.0 - z / f);
    w0 * (focus * focus + (2.0 * z / (k * w0 * w0)).powi(2)).sqrt()
}

fn annihilation(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

/// Photon-number distribution of `D(α) S(r) |0⟩` built from truncated
/// operator exponentials, `S(r) = exp[r (a² − a†²)/2]`.
pub fn squeezed_coherent_pnd(alpha: f64, r: f64, dim: usize, keep: usize) -> Vec<f64> {
    let a = annihilation(dim);
    let ad = a.transpose();
    let squeeze = ((&a * &a - &ad * &ad) * (0.5 * r)).exp();
    let displace = ((&ad - &a) * alpha).exp();
    let mut vac = DVector::zeros(dim);
    vac[0] = 1.0;
    let psi = displace * (squeeze * vac);
    (0..=keep).map(|n| psi[n] * psi[n]).collect()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `Π(n|m)` by the alternating inclusion–exclusion sum.
pub fn povm_alternating(n_det: usize, n: usize, m: usize) -> f64 {
    let nn = n_det as f64;
    binomial(n_det, n)
        * (0..=n)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(n, k) * ((n - k) as f64 / nn).powi(m as i32)
            })
            .sum::<f64>()
}

/// Click statistics of a coherent state with mean photon number `a`.
pub fn coherent_clicks(n_det: usize, a: f64) -> Vec<f64> {
    let x = 1.0 - (-a / n_det as f64).exp();
    (0..=n_det)
        .map(|n| binomial(n_det, n) * x.powi(n as i32) * (1.0 - x).powi((n_det - n) as i32))
        .collect()
}

pub fn poisson(mean: f64, cutoff: usize) -> Vec<f64> {
    (0..=cutoff)
        .map(|m| (-mean + m as f64 * mean.ln() - (1..=m).map(|i| (i as f64).ln()).sum::<f64>()).exp())
        .collect()
}

pub fn mandel(p: &[f64]) -> f64 {
    let m1: f64 = p.iter().enumerate().map(|(m, x)| m as f64 * x).sum();
    let m2: f64 = p.iter().enumerate().map(|(m, x)| (m * m) as f64 * x).sum();
    (m2 - m1 * m1) / m1 - 1.0
}

/// Amplitude of `|i, n−i⟩` in the `(+, −)` analyzer modes for the input
/// `|p, q⟩` in `(h, v)`, with `a_h† = c a_+† − s a_−†` and
/// `a_v† = s a_+† + c a_−†`, by binomial expansion.
fn rotated_amplitude(p: usize, q: usize, i: usize, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let n = p + q;
    let mut acc = 0.0;
    // Choose j of the h creators and l of the v creators to land in `+`.
    for j in 0..=p {
        let l = match i.checked_sub(j) {
            Some(l) if l <= q => l,
            _ => continue,
        };
        let term = binomial(p, j)
            * binomial(q, l)
            * c.powi(j as i32)
            * (-s).powi((p - j) as i32)
            * s.powi(l as i32)
            * c.powi((q - l) as i32);
        acc += term;
    }
    acc * (factorial(i) * factorial(n - i) / (factorial(p) * factorial(q))).sqrt()
}

/// Source state as `(n, m, amplitude)` for `|n−m, m⟩_A |m, n−m⟩_B` in
/// `(h, v)` modes.
pub fn source_terms(xi: Option<f64>, cutoff: usize) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    match xi {
        None => {
            let r = 0.5f64.sqrt();
            out.push((1, 0, r));
            out.push((1, 1, -r));
        }
        Some(xi) => {
            for n in 0..=cutoff {
                for m in 0..=n {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    out.push((n, m, sign * xi.tanh().powi(n as i32) / xi.cosh().powi(2)));
                }
            }
        }
    }
    out
}

/// Click-pattern probabilities `[A outcome][B outcome]` (0 none, 1 `+`,
/// 2 `−`, 3 both) by explicit enumeration of the four-mode Fock state.
pub fn brute_force_patterns(
    xi: Option<f64>,
    cutoff: usize,
    theta_a: f64,
    theta_b: f64,
    t_a: f64,
    t_b: f64,
    noise: f64,
) -> [[f64; 4]; 4] {
    let terms = source_terms(xi, cutoff);
    let nmax = terms.iter().map(|t| t.0).max().unwrap_or(0);
    let mut out = [[0.0; 4]; 4];
    let q = (-noise).exp();
    for n in 0..=nmax {
        for ia in 0..=n {
            for ib in 0..=n {
                let amp: f64 = terms
                    .iter()
                    .filter(|t| t.0 == n)
                    .map(|&(_, m, c)| c * rotated_amplitude(n - m, m, ia, theta_a) * rotated_amplitude(m, n - m, ib, theta_b))
                    .sum();
                let prob = amp * amp;
                if prob == 0.0 {
                    continue;
                }
                let silent = |photons: usize, t: f64| (1.0 - t).powi(photons as i32) * q;
                let side = |plus: usize, minus: usize, t: f64| {
                    let (sp, sm) = (silent(plus, t), silent(minus, t));
                    [sp * sm, (1.0 - sp) * sm, sp * (1.0 - sm), (1.0 - sp) * (1.0 - sm)]
                };
                let a = side(ia, n - ia, t_a);
                let b = side(ib, n - ib, t_b);
                for oa in 0..4 {
                    for ob in 0..4 {
                        out[oa][ob] += prob * a[oa] * b[ob];
                    }
                }
            }
        }
    }
    out
}

/// Squashed correlation of a pattern table; double clicks count as 0.
pub fn squashed_correlation(p: &[[f64; 4]; 4]) -> f64 {
    let v = [0.0, 1.0, -1.0, 0.0];
    let (mut num, mut den) = (0.0, 0.0);
    for oa in 1..4 {
        for ob in 1..4 {
            num += v[oa] * v[ob] * p[oa][ob];
            den += p[oa][ob];
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}
