//! GLRT detection of a known synchronization sequence with unknown phase.
//!
//! After the BS matched filter the observation is `y = s e^{j arg h} + z`
//! with `z ~ CN(0, sigma^2 I_S)`. The GLRT statistic
//! `T = 2 |s^H y|^2 / (sigma^2 ||s||^2)` is central chi-squared with two
//! degrees of freedom under H0 and noncentral with parameter
//! `2 S M |h|^2 P_x / sigma^2` under H1.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::RadioConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    target_false_alarm: f64,
    noise_power: f64,
    threshold: f64,
}

impl DetectorConfig {
    pub fn new(target_false_alarm: f64, noise_power: f64) -> Result<Self> {
        let threshold = threshold_for(target_false_alarm)?;
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(Error::param(format!("noise power must be positive, got {noise_power}")));
        }
        Ok(Self {
            target_false_alarm,
            noise_power,
            threshold,
        })
    }

    pub fn target_false_alarm(&self) -> f64 {
        self.target_false_alarm
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatsKind {
    Analytical,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionStats {
    pub false_alarm: f64,
    pub misdetection: f64,
    pub noncentrality: f64,
    pub kind: StatsKind,
    /// Zero for analytical results.
    pub trials: usize,
    /// 95% binomial half-width of `misdetection`; zero for analytical results.
    pub ci_half_width: f64,
}

impl DetectionStats {
    pub fn analytical(noncentrality: f64, threshold: f64) -> Self {
        Self {
            false_alarm: (-0.5 * threshold).exp(),
            misdetection: misdetection_probability(noncentrality, threshold),
            noncentrality,
            kind: StatsKind::Analytical,
            trials: 0,
            ci_half_width: 0.0,
        }
    }
}

/// 95% normal-approximation half-width for a binomial proportion, capped at
/// the distance from `p` to the farther end of `[0, 1]`.
pub fn binomial_ci_half_width(p: f64, trials: usize) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let w = 1.96 * (p * (1.0 - p) / trials as f64).sqrt();
    w.min(p.max(1.0 - p))
}

/// GLRT statistic `2 |s^H y|^2 / (sigma^2 ||s||^2)`.
pub fn glrt_statistic(y: &[Complex64], s: &[Complex64], noise_power: f64) -> Result<f64> {
    if y.len() != s.len() {
        return Err(Error::Dimension {
            expected: s.len(),
            actual: y.len(),
        });
    }
    if s.len() < 2 {
        return Err(Error::param("GLRT needs at least two symbols"));
    }
    let energy: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    if !(energy > 0.0) {
        return Err(Error::param("reference signal has zero energy"));
    }
    let corr: Complex64 = s.iter().zip(y).map(|(s, y)| s.conj() * y).sum();
    Ok(2.0 * corr.norm_sqr() / (noise_power * energy))
}

/// Threshold `t = -2 ln(false_alarm)` of the central chi-squared(2) test.
pub fn threshold_for(false_alarm: f64) -> Result<f64> {
    if !(false_alarm > 0.0 && false_alarm < 1.0) {
        return Err(Error::param(format!(
            "false-alarm probability must lie in (0, 1), got {false_alarm}"
        )));
    }
    Ok(-2.0 * false_alarm.ln())
}

/// Noncentrality `2 S M |h|^2 P_x / sigma^2` of the statistic under H1.
pub fn noncentrality(h: Complex64, radio: &RadioConfig) -> f64 {
    noncentrality_from_gain(h.norm_sqr(), radio)
}

pub fn noncentrality_from_gain(gain: f64, radio: &RadioConfig) -> f64 {
    2.0 * radio.sync_length as f64 * radio.bs_antennas as f64 * gain * radio.tx_power / radio.noise_power
}

/// Relative tail bound at which the Poisson mixture is truncated.
const SERIES_TAIL: f64 = 1e-14;

/// CDF at `t` of the noncentral chi-squared distribution with two degrees of
/// freedom and noncentrality `gamma`.
///
/// Evaluated as the Poisson(gamma/2) mixture of central chi-squared laws with
/// 2 + 2j degrees of freedom: `sum_j w_j P[Poisson(t/2) > j]`. The inner tail
/// is summed forward once `j` exceeds `t/2`, so tiny results keep their
/// relative accuracy.
pub fn noncentral_chi2_2_cdf(t: f64, gamma: f64) -> f64 {
    if !(t > 0.0) {
        return 0.0;
    }
    if t.is_infinite() {
        return 1.0;
    }
    let lambda = 0.5 * gamma.max(0.0);
    let x = 0.5 * t;
    if lambda == 0.0 {
        return -(-x).exp_m1();
    }

    let ln_lambda = lambda.ln();
    let ln_x = x.ln();
    // ln of Poisson(x) pmf at i.
    let ln_px = |i: f64, ln_fact: f64| -x + i * ln_x - ln_fact;

    let mut sum = 0.0;
    let mut ln_fact = 0.0; // ln(j!)
    // Running lower sum of Poisson(x) masses, used while j + 1 <= x.
    let mut lower = 0.0;
    let mut j = 0usize;
    loop {
        let jf = j as f64;
        if j > 0 {
            ln_fact += jf.ln();
        }
        let ln_w = -lambda + jf * ln_lambda - ln_fact;
        let p_j = ln_px(jf, ln_fact).exp();
        lower += p_j;

        // Upper tail P[Poisson(x) > j].
        let tail = if jf + 1.0 <= x {
            (1.0 - lower).max(0.0)
        } else {
            // sum_{i > j} p_i = p_{j+1} (1 + x/(j+2) + x^2/((j+2)(j+3)) + ...)
            let ln_p_next = ln_px(jf + 1.0, ln_fact + (jf + 1.0).ln());
            let mut term = 1.0;
            let mut series = 1.0;
            let mut i = jf + 2.0;
            loop {
                term *= x / i;
                series += term;
                if term < 1e-17 * series {
                    break;
                }
                i += 1.0;
            }
            (ln_p_next + series.ln()).exp()
        };

        let contrib = (ln_w.exp()) * tail;
        sum += contrib;

        // Past the Poisson mode both the weights and the inner tail decrease,
        // so the remainder is bounded by tail * w_j * r / (1 - r).
        if jf > lambda {
            let r = lambda / (jf + 2.0);
            let bound = ln_w + tail.max(f64::MIN_POSITIVE).ln() + (r / (1.0 - r)).ln();
            if sum > 0.0 && bound < sum.ln() + SERIES_TAIL.ln() {
                break;
            }
            if sum == 0.0 && bound < -745.0 {
                break;
            }
        }
        j += 1;
    }
    sum.clamp(0.0, 1.0)
}

/// First-order Marcum Q-function `Q_1(a, b)`.
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    1.0 - noncentral_chi2_2_cdf(b * b, a * a)
}

/// Probability that the statistic stays at or below `t` when the device is
/// active with noncentrality `gamma`.
pub fn misdetection_probability(gamma: f64, t: f64) -> f64 {
    noncentral_chi2_2_cdf(t, gamma)
}

/// GLRT decision: active iff the statistic strictly exceeds the threshold.
pub fn decide(y: &[Complex64], s: &[Complex64], config: &DetectorConfig) -> Result<bool> {
    Ok(glrt_statistic(y, s, config.noise_power)? > config.threshold)
}

/// Seed of the fixed synchronization sequence.
pub const SYNC_SEED: u64 = 0x5eed_5e9c;

/// Pseudo-random constant-power synchronization sequence: `S` unit-modulus
/// symbols scaled to `sqrt(P_x)`.
pub fn synchronization_sequence(length: usize, tx_power: f64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(SYNC_SEED);
    let amp = tx_power.sqrt();
    (0..length)
        .map(|_| Complex64::from_polar(amp, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)))
        .collect()
}

/// Applies the matched filter `b^H / sqrt(M)` to an `M x S` observation
/// given as rows per antenna.
pub fn matched_filter(rows: &[Vec<Complex64>], bs_steering: &[Complex64]) -> Result<Vec<Complex64>> {
    if rows.len() != bs_steering.len() {
        return Err(Error::Dimension {
            expected: bs_steering.len(),
            actual: rows.len(),
        });
    }
    let s = rows.first().map_or(0, |r| r.len());
    let scale = 1.0 / (bs_steering.len() as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); s];
    for (row, b) in rows.iter().zip(bs_steering) {
        if row.len() != s {
            return Err(Error::Dimension {
                expected: s,
                actual: row.len(),
            });
        }
        for (o, v) in out.iter_mut().zip(row) {
            *o += b.conj() * v * scale;
        }
    }
    Ok(out)
}
