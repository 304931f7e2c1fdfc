use irsdet::detector::{glrt_statistic, misdetection_probability, synchronization_sequence, threshold_for};
use irsdet_oracles::{ks_critical_001, ks_statistic, noncentral_chi2_2_cdf_quadrature};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn cn(rng: &mut ChaCha8Rng, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// GLRT samples with a scaled sequence `a s` plus white noise, where `a` is
/// chosen to give noncentrality `gamma`.
fn samples(gamma: f64, n: usize, seed: u64) -> Vec<f64> {
    let sigma2 = 3e-13;
    let s = synchronization_sequence(32, 0.631);
    let energy: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    let a = Complex64::from_polar((gamma * sigma2 / (2.0 * energy)).sqrt(), 0.7);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let y: Vec<Complex64> = s.iter().map(|si| a * si + cn(&mut rng, sigma2)).collect();
            glrt_statistic(&y, &s, sigma2).unwrap()
        })
        .collect()
}

#[test]
fn statistic_follows_noncentral_chi2_two_dof() {
    for (i, &gamma) in [0.0, 2.5, 13.0, 40.0].iter().enumerate() {
        let x = samples(gamma, 20_000, i as u64);
        let d = ks_statistic(&x, |t| noncentral_chi2_2_cdf_quadrature(t, gamma));
        assert!(d < ks_critical_001(x.len()), "gamma {gamma}: D = {d}");
    }
}

#[test]
fn empirical_misdetection_tracks_closed_form() {
    let t = threshold_for(0.1).unwrap();
    let n = 40_000;
    for (i, &gamma) in [1.0, 6.0, 15.0].iter().enumerate() {
        let x = samples(gamma, n, 100 + i as u64);
        let p = x.iter().filter(|&&v| v <= t).count() as f64 / n as f64;
        let q = misdetection_probability(gamma, t);
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!((p - q).abs() <= 4.0 * se, "gamma {gamma}: {p} vs {q}");
    }
}
