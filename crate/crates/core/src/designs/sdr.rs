//! Semidefinite relaxation of the max-min phase-shift problem:
//!
//! ```text
//! maximize tau  s.t.  tau <= tr(A_q W)  for all q,  diag(W) = 1,  W >= 0
//! ```
//!
//! solved with an infeasible-start primal-dual interior-point method using
//! the HKM search direction and Mehrotra predictor-corrector steps. Every
//! constraint matrix is rank one (`e_u e_u^H` or `a_q a_q^H`), so the Schur
//! complement is `Re((V^H X V) .* conj(V^H Z^-1 V))` with `V = [I | A]`.
//!
//! In standard form the primal variables are `W`, the gain slacks `s >= 0`
//! and the free variable `tau`; the dual is
//!
//! ```text
//! minimize sum(lambda)  s.t.  diag(lambda) - sum_q mu_q A_q >= 0,
//!                             mu >= 0,  sum(mu) = 1
//! ```
//!
//! whose objective certifies an upper bound on `tau`.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::GainMatrixSet;
use crate::linalg::{hermitian_part, inner, SplitMatrix};
use crate::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
const MAX_ITERATIONS: usize = 200;
const STEP_FRACTION: f64 = 0.98;
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    /// Relative primal residual (unit diagonal and gain rows).
    pub primal_residual: f64,
    /// Relative dual residual.
    pub dual_residual: f64,
    /// `(dual - primal) / max(|primal|, |dual|)` in the normalized problem.
    pub relative_gap: f64,
}

impl fmt::Display for SolverDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iterations={} primal_residual={:.3e} dual_residual={:.3e} relative_gap={:.3e}",
            self.iterations, self.primal_residual, self.dual_residual, self.relative_gap
        )
    }
}

#[derive(Debug, Clone)]
pub struct SdrSolution {
    /// Relaxed covariance `W`, Hermitian PSD with unit diagonal.
    pub w: DMatrix<Complex64>,
    /// Primal optimum `tau`.
    pub tau: f64,
    /// Dual objective: certified upper bound on the relaxed optimum.
    pub upper_bound: f64,
    pub diagnostics: SolverDiagnostics,
}

impl SdrSolution {
    /// Smallest eigenvalue of `W`.
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.w.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Largest step `alpha` keeping `x + alpha dx` positive definite.
fn max_step_psd(chol_x: &Cholesky<Complex64, Dyn>, dx: &DMatrix<Complex64>) -> f64 {
    let l = chol_x.l();
    let left = l.solve_lower_triangular(dx).expect("nonsingular factor");
    let both = l
        .solve_lower_triangular(&left.adjoint())
        .expect("nonsingular factor");
    let min_eig = SymmetricEigen::new(hermitian_part(&both))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min_eig
    }
}

fn max_step_pos(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

struct Direction {
    dx: DMatrix<Complex64>,
    ds: DVector<f64>,
    dtau: f64,
    dy_diag: DVector<f64>,
    dy_gain: DVector<f64>,
    dz_mat: DMatrix<Complex64>,
    dz: DVector<f64>,
}

struct Iterate {
    x: DMatrix<Complex64>,
    s: DVector<f64>,
    tau: f64,
    y_diag: DVector<f64>,
    y_gain: DVector<f64>,
    z_mat: DMatrix<Complex64>,
    z: DVector<f64>,
}

struct Problem {
    /// U x Q matrix of normalized effective steering vectors.
    a: DMatrix<Complex64>,
    a_split: SplitMatrix,
    u: usize,
    q: usize,
}

impl Problem {
    /// `A_W^T y = diag(y_diag) + A diag(y_gain) A^H`.
    fn adjoint_op(&self, y_diag: &DVector<f64>, y_gain: &DVector<f64>) -> DMatrix<Complex64> {
        let scaled = DMatrix::from_fn(self.u, self.q, |i, j| self.a[(i, j)] * y_gain[j]);
        let mut m = &scaled * self.a.adjoint();
        for i in 0..self.u {
            m[(i, i)] += Complex64::new(y_diag[i], 0.0);
        }
        hermitian_part(&m)
    }

    /// Diagonal and gain-row evaluations `(Re Y_uu, Re a_q^H Y a_q)`.
    fn forward_op(&self, y: &DMatrix<Complex64>) -> (DVector<f64>, DVector<f64>) {
        let diag = DVector::from_fn(self.u, |i, _| y[(i, i)].re);
        let ya = y * &self.a;
        let gain = DVector::from_fn(self.q, |j, _| {
            self.a
                .column(j)
                .iter()
                .zip(ya.column(j).iter())
                .map(|(a, v)| (a.conj() * v).re)
                .sum()
        });
        (diag, gain)
    }

    /// Schur complement of the PSD block.
    fn schur(&self, x: &DMatrix<Complex64>, zinv: &DMatrix<Complex64>) -> DMatrix<f64> {
        let (u, q) = (self.u, self.q);
        let xs = SplitMatrix::from_complex(x);
        let zs = SplitMatrix::from_complex(zinv);
        let xa = xs.mul(&self.a_split);
        let za = zs.mul(&self.a_split);
        let axa = self.a_split.adjoint_mul(&xa);
        let aza = self.a_split.adjoint_mul(&za);
        let mut m = DMatrix::<f64>::zeros(u + q, u + q);
        // Re(G_ij conj(H_ij)) = Gr Hr + Gi Hi
        for j in 0..u {
            for i in 0..u {
                m[(i, j)] = xs.re[(i, j)] * zs.re[(i, j)] + xs.im[(i, j)] * zs.im[(i, j)];
            }
        }
        for j in 0..q {
            for i in 0..u {
                let v = xa.re[(i, j)] * za.re[(i, j)] + xa.im[(i, j)] * za.im[(i, j)];
                m[(i, u + j)] = v;
                m[(u + j, i)] = v;
            }
        }
        for j in 0..q {
            for i in 0..q {
                m[(u + i, u + j)] = axa.re[(i, j)] * aza.re[(i, j)] + axa.im[(i, j)] * aza.im[(i, j)];
            }
        }
        m
    }
}

/// Solves the relaxed max-min problem for the given gain set.
pub fn solve_sdr(gains: &GainMatrixSet, tolerance: f64) -> Result<SdrSolution> {
    if !(tolerance > 0.0) {
        return Err(Error::param("solver tolerance must be positive"));
    }
    let u = gains.cell_count();
    let q = gains.location_count();
    if u == 0 || q == 0 {
        return Err(Error::param("SDR needs at least one cell and one location"));
    }

    let raw = gains.steering_matrix();
    let scale = raw
        .column_iter()
        .map(|c| c.norm_squared())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        // Every gain vanishes; any feasible W is optimal.
        return Ok(SdrSolution {
            w: DMatrix::identity(u, u),
            tau: 0.0,
            upper_bound: 0.0,
            diagnostics: SolverDiagnostics {
                iterations: 0,
                primal_residual: 0.0,
                dual_residual: 0.0,
                relative_gap: 0.0,
            },
        });
    }
    let a = raw / Complex64::new(scale.sqrt(), 0.0);
    let problem = Problem {
        a_split: SplitMatrix::from_complex(&a),
        a,
        u,
        q,
    };

    let mut it = initial_point(&problem);
    let mut best = (f64::NEG_INFINITY, DMatrix::<Complex64>::identity(u, u));
    let n = (u + q) as f64;
    let mut diagnostics = SolverDiagnostics {
        iterations: 0,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        relative_gap: f64::INFINITY,
    };

    for iteration in 0..=MAX_ITERATIONS {
        // Residuals.
        let (ax_diag, ax_gain) = problem.forward_op(&it.x);
        let r_diag = DVector::from_fn(u, |i, _| 1.0 - ax_diag[i]);
        let r_gain = DVector::from_fn(q, |j, _| -(ax_gain[j] - it.s[j] - it.tau));
        let r_zmat = -problem.adjoint_op(&it.y_diag, &it.y_gain) - &it.z_mat;
        let r_z = &it.y_gain - &it.z;
        let r_tau = it.y_gain.sum() - 1.0;

        let complementarity = inner(&it.x, &it.z_mat) + it.s.dot(&it.z);
        let mu = complementarity / n;
        let dobj = -it.y_diag.sum();
        let primal_residual = (r_diag.norm_squared() + r_gain.norm_squared()).sqrt() / (1.0 + (u as f64).sqrt());
        let dual_residual = (r_zmat.norm_squared() + r_z.norm_squared() + r_tau * r_tau).sqrt()
            / (1.0 + it.z_mat.norm() + it.z.norm());
        // Certify the primal side with the exactly feasible point obtained
        // by rescaling X to unit diagonal; this is immune to the drift of
        // the primal residual late in the solve.
        let candidate = unit_diagonal(&it.x);
        let (_, gains_c) = problem.forward_op(&candidate);
        let tau_c = gains_c.iter().copied().fold(f64::INFINITY, f64::min);
        if tau_c > best.0 {
            best = (tau_c, candidate);
        }
        let pobj = best.0;
        let relative_gap = (dobj - pobj).abs() / pobj.abs().max(dobj.abs()).max(f64::MIN_POSITIVE);
        diagnostics = SolverDiagnostics {
            iterations: iteration,
            primal_residual,
            dual_residual,
            relative_gap,
        };
        if relative_gap <= tolerance && dual_residual <= RESIDUAL_TOL {
            break;
        }
        if iteration == MAX_ITERATIONS {
            return Err(Error::Solver(diagnostics));
        }

        let chol_z = Cholesky::new(it.z_mat.clone()).ok_or(Error::Solver(diagnostics))?;
        let zinv = chol_z.inverse();
        let chol_x = Cholesky::new(it.x.clone()).ok_or(Error::Solver(diagnostics))?;

        let mut schur = problem.schur(&it.x, &zinv);
        for j in 0..q {
            schur[(u + j, u + j)] += it.s[j] / it.z[j];
        }
        let chol_m = match Cholesky::new(schur.clone()) {
            Some(c) => c,
            None => {
                let mut bumped = schur.clone();
                let bump = 1e-14 * schur.diagonal().max();
                for i in 0..(u + q) {
                    bumped[(i, i)] += bump;
                }
                Cholesky::new(bumped).ok_or(Error::Solver(diagnostics))?
            }
        };
        // e = gain-row indicator; e^T M^-1 e is reused by both solves.
        let mut e = DVector::<f64>::zeros(u + q);
        e.rows_mut(u, q).fill(1.0);
        let m_inv_e = refined_solve(&schur, &chol_m, &e);
        let e_m_e = m_inv_e.rows(u, q).sum();

        let residuals = Residuals {
            r_diag: &r_diag,
            r_gain: &r_gain,
            r_zmat: &r_zmat,
            r_z: &r_z,
            r_tau,
        };
        let ctx = StepContext {
            problem: &problem,
            it: &it,
            zinv: &zinv,
            schur: &schur,
            chol_m: &chol_m,
            m_inv_e: &m_inv_e,
            e_m_e,
            res: residuals,
        };

        // Predictor.
        let aff = ctx.direction(0.0, None);
        let chol_z_ref = &chol_z;
        let (ap_aff, ad_aff) = step_lengths(&it, &chol_x, chol_z_ref, &aff, 1.0);
        let mu_aff = (inner(&(&it.x + &aff.dx * Complex64::new(ap_aff, 0.0)), &(&it.z_mat + &aff.dz_mat * Complex64::new(ad_aff, 0.0)))
            + (&it.s + &aff.ds * ap_aff).dot(&(&it.z + &aff.dz * ad_aff)))
            / n;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let dir = ctx.direction(sigma * mu, Some(&aff));
        let (ap, ad) = step_lengths(&it, &chol_x, chol_z_ref, &dir, STEP_FRACTION);

        let cp = Complex64::new(ap, 0.0);
        let cd = Complex64::new(ad, 0.0);
        it.x = hermitian_part(&(&it.x + &dir.dx * cp));
        it.s += &dir.ds * ap;
        it.tau += dir.dtau * ap;
        it.y_diag += &dir.dy_diag * ad;
        it.y_gain += &dir.dy_gain * ad;
        it.z_mat = hermitian_part(&(&it.z_mat + &dir.dz_mat * cd));
        it.z += &dir.dz * ad;
    }

    let (tau, w) = best;
    Ok(SdrSolution {
        w,
        tau: tau * scale,
        upper_bound: -it.y_diag.sum() * scale,
        diagnostics,
    })
}

/// `D X D` with `D = diag(X)^-1/2`: unit diagonal, still PSD.
fn unit_diagonal(x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let u = x.nrows();
    let d: Vec<f64> = (0..u).map(|i| x[(i, i)].re.sqrt()).collect();
    let mut w = hermitian_part(x);
    for j in 0..u {
        for i in 0..u {
            w[(i, j)] /= d[i] * d[j];
        }
        w[(j, j)] = Complex64::new(1.0, 0.0);
    }
    w
}

/// Cholesky solve followed by one step of iterative refinement.
fn refined_solve(m: &DMatrix<f64>, chol: &Cholesky<f64, Dyn>, b: &DVector<f64>) -> DVector<f64> {
    let mut x = chol.solve(b);
    let r = b - m * &x;
    x += chol.solve(&r);
    x
}

fn initial_point(p: &Problem) -> Iterate {
    let (u, q) = (p.u, p.q);
    let x = DMatrix::<Complex64>::identity(u, u);
    let y_gain = DVector::from_element(q, 1.0 / q as f64);
    // Normalized gain vectors have norm <= 1, so the weighted sum of A_q has
    // spectral norm <= 1 and lambda = 2 keeps Z strictly positive.
    let y_diag = DVector::from_element(u, -2.0);
    let z_mat = -p.adjoint_op(&y_diag, &y_gain);
    let z = y_gain.clone();
    let mu_psd = inner(&x, &z_mat) / u as f64;
    let norms: Vec<f64> = p.a.column_iter().map(|c| c.norm_squared()).collect();
    let min_norm = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let tau = min_norm - mu_psd * q as f64;
    let s = DVector::from_iterator(q, norms.iter().map(|n| n - tau));
    Iterate {
        x,
        s,
        tau,
        y_diag,
        y_gain,
        z_mat,
        z,
    }
}

struct Residuals<'a> {
    r_diag: &'a DVector<f64>,
    r_gain: &'a DVector<f64>,
    r_zmat: &'a DMatrix<Complex64>,
    r_z: &'a DVector<f64>,
    r_tau: f64,
}

struct StepContext<'a> {
    problem: &'a Problem,
    it: &'a Iterate,
    zinv: &'a DMatrix<Complex64>,
    schur: &'a DMatrix<f64>,
    chol_m: &'a Cholesky<f64, Dyn>,
    m_inv_e: &'a DVector<f64>,
    e_m_e: f64,
    res: Residuals<'a>,
}

impl StepContext<'_> {
    /// HKM direction targeting complementarity `target_mu`, with the
    /// second-order correction from `corr` when given.
    fn direction(&self, target_mu: f64, corr: Option<&Direction>) -> Direction {
        let p = self.problem;
        let it = self.it;
        let (u, q) = (p.u, p.q);
        let tm = Complex64::new(target_mu, 0.0);

        // T = mu Z^-1 - X - sym(X R_Z Z^-1) - sym(dX_aff dZ_aff Z^-1)
        let mut t_x = self.zinv * tm - &it.x - hermitian_part(&(&it.x * self.res.r_zmat * self.zinv));
        let mut t_s = DVector::from_fn(q, |j, _| {
            target_mu / it.z[j] - it.s[j] - it.s[j] * self.res.r_z[j] / it.z[j]
        });
        if let Some(c) = corr {
            t_x -= hermitian_part(&(&c.dx * &c.dz_mat * self.zinv));
            for j in 0..q {
                t_s[j] -= c.ds[j] * c.dz[j] / it.z[j];
            }
        }

        let (at_diag, at_gain) = p.forward_op(&t_x);
        let mut h = DVector::<f64>::zeros(u + q);
        for i in 0..u {
            h[i] = self.res.r_diag[i] - at_diag[i];
        }
        for j in 0..q {
            h[u + j] = self.res.r_gain[j] - at_gain[j] + t_s[j];
        }
        let m_inv_h = refined_solve(self.schur, self.chol_m, &h);
        let dtau = -(self.res.r_tau + m_inv_h.rows(u, q).sum()) / self.e_m_e;
        let dy = m_inv_h + self.m_inv_e * dtau;
        let dy_diag = dy.rows(0, u).into_owned();
        let dy_gain = dy.rows(u, q).into_owned();

        let dz_mat = self.res.r_zmat - p.adjoint_op(&dy_diag, &dy_gain);
        let dz = self.res.r_z + &dy_gain;
        // dX = T + sym(X (A^T dy) Z^-1)
        let aty = p.adjoint_op(&dy_diag, &dy_gain);
        let dx = hermitian_part(&(t_x + hermitian_part(&(&it.x * aty * self.zinv))));
        let ds = DVector::from_fn(q, |j, _| t_s[j] - it.s[j] * dy_gain[j] / it.z[j]);

        Direction {
            dx,
            ds,
            dtau,
            dy_diag,
            dy_gain,
            dz_mat,
            dz,
        }
    }
}

fn step_lengths(
    it: &Iterate,
    chol_x: &Cholesky<Complex64, Dyn>,
    chol_z: &Cholesky<Complex64, Dyn>,
    dir: &Direction,
    fraction: f64,
) -> (f64, f64) {
    let ap = max_step_psd(chol_x, &dir.dx).min(max_step_pos(&it.s, &dir.ds));
    let ad = max_step_psd(chol_z, &dir.dz_mat).min(max_step_pos(&it.z, &dir.dz));
    ((fraction * ap).min(1.0), (fraction * ad).min(1.0))
}
