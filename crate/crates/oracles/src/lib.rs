//! Reference computations for the irsdet test suites.
//!
//! Everything here is deliberately naive and shares no code with the
//! `irsdet` implementation: densities are integrated numerically instead of
//! summed as series, and max-min phase problems are solved by exhaustive
//! search over a discrete phase grid.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Modified Bessel function of the first kind, order zero, multiplied by
/// `exp(-shift)`. Plain power series; adequate for arguments up to a few
/// hundred.
fn bessel_i0_scaled(z: f64, shift: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    // Scale through logs so that large sums do not overflow after shifting.
    (sum.ln() - shift).exp()
}

/// Density of the noncentral chi-squared distribution with two degrees of
/// freedom and noncentrality `gamma`.
pub fn noncentral_chi2_2_pdf(x: f64, gamma: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    0.5 * bessel_i0_scaled((gamma * x).sqrt(), 0.5 * (x + gamma))
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // Split into panels first so that narrow peaks are not skipped.
    let panels = 16;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == panels { b } else { lo + h };
            let (flo, fhi) = (f(lo), f(hi));
            let (whole, m, fm) = simpson(f, lo, flo, hi, fhi);
            adaptive_simpson(f, lo, flo, hi, fhi, whole, m, fm, tol / panels as f64, 40)
        })
        .sum()
}

/// CDF of the noncentral chi-squared distribution (2 degrees of freedom) at
/// `t`, by direct quadrature of the density.
pub fn noncentral_chi2_2_cdf_quadrature(t: f64, gamma: f64) -> f64 {
    integrate(&|x| noncentral_chi2_2_pdf(x, gamma), 0.0, t, 1e-13)
}

/// Exhaustive max-min search: maximizes `min_q |a_q^H w|^2` over unit-modulus
/// `w` with phases restricted to `levels` equally spaced values. The first
/// cell is pinned to phase zero (the objective is global-phase invariant).
///
/// Returns the optimum and the maximizing phases.
pub fn brute_force_max_min(gains: &[Vec<Complex64>], levels: usize) -> (f64, Vec<f64>) {
    let u = gains[0].len();
    assert!(u >= 1 && gains.iter().all(|g| g.len() == u));
    let phasors: Vec<Complex64> = (0..levels)
        .map(|l| Complex64::from_polar(1.0, 2.0 * PI * l as f64 / levels as f64))
        .collect();
    let free = u - 1;
    let combos = levels.pow(free as u32);
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = 0usize;
    let mut idx = vec![0usize; free];
    for c in 0..combos {
        let mut rem = c;
        for slot in idx.iter_mut() {
            *slot = rem % levels;
            rem /= levels;
        }
        let mut worst = f64::INFINITY;
        for g in gains {
            let mut acc = g[0].conj();
            for (k, &l) in idx.iter().enumerate() {
                acc += g[k + 1].conj() * phasors[l];
            }
            worst = worst.min(acc.norm_sqr());
        }
        if worst > best {
            best = worst;
            best_idx = c;
        }
    }
    let mut phases = vec![0.0; u];
    let mut rem = best_idx;
    for p in phases.iter_mut().skip(1) {
        *p = 2.0 * PI * (rem % levels) as f64 / levels as f64;
        rem /= levels;
    }
    (best, phases)
}

/// Standard error of a binomial proportion.
pub fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = f - i as f64 / n;
            let hi = (i + 1) as f64 / n - f;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}
