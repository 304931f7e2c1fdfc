//! Gaussian randomization: recover unit-modulus vectors from the relaxed
//! covariance by sampling `CN(0, W)` and projecting onto the unit circle.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{GainMatrixSet, SdrSolution};
use crate::irs::PhaseShiftVector;
use crate::linalg::SplitMatrix;
use crate::rng::{substream, StreamKind};
use crate::{Error, Result};

/// Draws evaluated per batch.
const BATCH: usize = 128;

#[derive(Debug, Clone)]
pub struct RandomizedDesign {
    pub w: PhaseShiftVector,
    /// `min_q w^H A_q w` of the selected draw.
    pub min_gain: f64,
    /// Index of the selected draw.
    pub draw: usize,
}

/// Eigenvalues below this fraction of the largest are solver noise.
const EIGEN_FLOOR: f64 = 1e-12;

/// `L` with `L L^H = W`; negative and negligible eigenvalues are clipped.
fn sampling_factor(w: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(w.clone());
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut f = eig.eigenvectors;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let lambda = if lambda > EIGEN_FLOOR * top { lambda } else { 0.0 };
        let s = Complex64::new(lambda.sqrt(), 0.0);
        for v in f.column_mut(j).iter_mut() {
            *v *= s;
        }
    }
    f
}

/// Unit-modulus projection; exact zeros map to 1.
fn project(v: Complex64) -> Complex64 {
    let n = v.norm();
    if n == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        v / n
    }
}

pub fn gaussian_randomization(
    sol: &SdrSolution,
    gains: &GainMatrixSet,
    draws: usize,
    seed: u64,
) -> Result<RandomizedDesign> {
    if draws == 0 {
        return Err(Error::param("randomization count G must be at least 1"));
    }
    let u = gains.cell_count();
    if sol.w.nrows() != u {
        return Err(Error::Dimension {
            expected: u,
            actual: sol.w.nrows(),
        });
    }
    let factor = SplitMatrix::from_complex(&sampling_factor(&sol.w));
    let a = SplitMatrix::from_complex(&gains.steering_matrix());
    let batches: Vec<(usize, usize)> = (0..draws)
        .step_by(BATCH)
        .map(|start| (start, (start + BATCH).min(draws)))
        .collect();

    let best = batches
        .par_iter()
        .map(|&(start, end)| {
            let n = end - start;
            // Standard complex normal entries, one substream per draw.
            let mut xi = DMatrix::<Complex64>::zeros(u, n);
            for k in 0..n {
                let mut rng = substream(seed, StreamKind::Randomization, (start + k) as u64);
                for i in 0..u {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    xi[(i, k)] = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
                }
            }
            let nu = factor.mul(&SplitMatrix::from_complex(&xi)).to_complex().map(project);
            let resp = a.adjoint_mul(&SplitMatrix::from_complex(&nu));
            let mut best = (f64::NEG_INFINITY, start);
            for k in 0..n {
                let mut worst = f64::INFINITY;
                for q in 0..resp.nrows() {
                    let (re, im) = (resp.re[(q, k)], resp.im[(q, k)]);
                    worst = worst.min(re * re + im * im);
                }
                if worst > best.0 {
                    best = (worst, start + k);
                }
            }
            (best, nu.column(best.1 - start).iter().copied().collect::<Vec<_>>())
        })
        .reduce(
            || ((f64::NEG_INFINITY, usize::MAX), Vec::new()),
            |a, b| {
                if b.0 .0 > a.0 .0 || (b.0 .0 == a.0 .0 && b.0 .1 < a.0 .1) {
                    b
                } else {
                    a
                }
            },
        );

    let ((min_gain, draw), coeffs) = best;
    Ok(RandomizedDesign {
        w: PhaseShiftVector::project(&coeffs),
        min_gain,
        draw,
    })
}
