//! Phase-shift designs: worst-case optimized (SDR plus Gaussian
//! randomization), tiled linear, and quadratic.

mod format;
mod heuristic;
mod randomization;
mod sdr;

pub use format::{parse_design, write_design, DesignFile};
pub use heuristic::{linear_tiled_design, quadratic_design, tile_rows};
pub use randomization::{gaussian_randomization, RandomizedDesign};
pub use sdr::{solve_sdr, SdrSolution, SolverDiagnostics, DEFAULT_TOLERANCE};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{device_irs_los, irs_bs_channel, RadioConfig};
use crate::geometry::{CartesianPoint, CoverageArea, IrsGeometry};
use crate::irs::{steering_vector, unit_cell_factor, PhaseShiftVector, UnitCellFactorModel};
use crate::rng::{derive_seed, StreamKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DesignSpec {
    /// SDR followed by `randomization_count` Gaussian draws; repeated
    /// `repetitions` times with independent draws for averaged reporting.
    Optimized {
        randomization_count: usize,
        seed: u64,
        repetitions: usize,
    },
    Linear { tile_count: usize },
    Quadratic,
}

impl DesignSpec {
    pub fn validate(&self, geom: &IrsGeometry) -> Result<()> {
        match *self {
            DesignSpec::Optimized {
                randomization_count,
                repetitions,
                ..
            } => {
                if randomization_count == 0 {
                    return Err(Error::param("randomization count G must be at least 1"));
                }
                if repetitions == 0 {
                    return Err(Error::param("repetition count must be at least 1"));
                }
            }
            DesignSpec::Linear { tile_count } => {
                if tile_count == 0 || geom.u_count_y % tile_count != 0 {
                    return Err(Error::param(format!(
                        "tile count {tile_count} must divide U_y = {}",
                        geom.u_count_y
                    )));
                }
            }
            DesignSpec::Quadratic => {}
        }
        Ok(())
    }

    /// Short label used in tables, e.g. `linear4`.
    pub fn label(&self) -> String {
        match self {
            DesignSpec::Optimized { .. } => "optimized".to_string(),
            DesignSpec::Linear { tile_count } => format!("linear{tile_count}"),
            DesignSpec::Quadratic => "quadratic".to_string(),
        }
    }
}

/// Effective steering vectors `a_q` with `|h_q|^2 = |a_q^H w|^2`.
#[derive(Debug, Clone)]
pub struct GainMatrixSet {
    vectors: Vec<Vec<Complex64>>,
    locations: Vec<CartesianPoint>,
}

impl GainMatrixSet {
    /// Builds a set from raw vectors (no associated locations).
    pub fn from_vectors(vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let u = vectors.first().map_or(0, Vec::len);
        if vectors.is_empty() || u == 0 {
            return Err(Error::param("gain set needs at least one nonempty vector"));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != u) {
            return Err(Error::Dimension {
                expected: u,
                actual: v.len(),
            });
        }
        Ok(Self {
            vectors,
            locations: Vec::new(),
        })
    }

    pub fn cell_count(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn location_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    /// Grid points the vectors were built for; empty for raw sets.
    pub fn locations(&self) -> &[CartesianPoint] {
        &self.locations
    }

    /// U x Q matrix with `a_q` as columns.
    pub fn steering_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.cell_count(), self.location_count(), |u, q| self.vectors[q][u])
    }

    /// `w^H A_q w = |a_q^H w|^2`.
    pub fn gain(&self, q: usize, w: &[Complex64]) -> f64 {
        self.vectors[q]
            .iter()
            .zip(w)
            .map(|(a, w)| a.conj() * w)
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// `tr(A_q W) = a_q^H W a_q`.
    pub fn trace_product(&self, q: usize, w: &DMatrix<Complex64>) -> f64 {
        let a = &self.vectors[q];
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, aj) in a.iter().enumerate() {
            let col: Complex64 = a.iter().enumerate().map(|(i, ai)| ai.conj() * w[(i, j)]).sum();
            acc += col * aj;
        }
        acc.re
    }
}

pub fn build_gain_matrices(
    grid: &[CartesianPoint],
    radio: &RadioConfig,
    geom: &IrsGeometry,
    ucf: &UnitCellFactorModel,
) -> Result<GainMatrixSet> {
    if grid.is_empty() {
        return Err(Error::param("design grid is empty"));
    }
    let hr = irs_bs_channel(radio).norm();
    let vectors = grid
        .par_iter()
        .map(|&q| {
            let (ht, dir) = device_irs_los(q, radio.wavelength)?;
            let scale = hr * ht.norm() * unit_cell_factor(dir, radio.bs_direction, ucf);
            Ok(steering_vector(dir, radio.bs_direction, geom)
                .entries
                .into_iter()
                .map(|a| a * scale)
                .collect())
        })
        .collect::<Result<Vec<Vec<Complex64>>>>()?;
    Ok(GainMatrixSet {
        vectors,
        locations: grid.to_vec(),
    })
}

/// Minimum gain over the set and the first location attaining it.
pub fn worst_case_gain(w: &PhaseShiftVector, gains: &GainMatrixSet) -> Result<(f64, usize)> {
    if w.len() != gains.cell_count() {
        return Err(Error::Dimension {
            expected: gains.cell_count(),
            actual: w.len(),
        });
    }
    let c = w.coefficients();
    Ok((0..gains.location_count())
        .into_par_iter()
        .map(|q| (gains.gain(q, c), q))
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        ))
}

/// Designs produced for one spec.
#[derive(Debug, Clone)]
pub struct RealizedDesigns {
    /// One vector for the heuristics, `repetitions` vectors when optimized.
    pub designs: Vec<PhaseShiftVector>,
    pub sdr: Option<SdrSolution>,
}

/// Seed of the randomization for repetition `r` of an optimized spec.
pub fn repetition_seed(seed: u64, r: usize) -> u64 {
    derive_seed(seed, StreamKind::Repetition, r as u64)
}

/// Generates the design(s) described by `spec`. The SDR is solved once
/// and shared by all repetitions.
pub fn realize(
    spec: &DesignSpec,
    area: &CoverageArea,
    gains: &GainMatrixSet,
    radio: &RadioConfig,
    geom: &IrsGeometry,
) -> Result<RealizedDesigns> {
    spec.validate(geom)?;
    match *spec {
        DesignSpec::Optimized {
            randomization_count,
            seed,
            repetitions,
        } => {
            let sol = solve_sdr(gains, DEFAULT_TOLERANCE)?;
            let designs = (0..repetitions)
                .map(|r| {
                    gaussian_randomization(&sol, gains, randomization_count, repetition_seed(seed, r))
                        .map(|d| d.w)
                })
                .collect::<Result<_>>()?;
            Ok(RealizedDesigns {
                designs,
                sdr: Some(sol),
            })
        }
        DesignSpec::Linear { tile_count } => Ok(RealizedDesigns {
            designs: vec![linear_tiled_design(tile_count, area, radio, geom)?],
            sdr: None,
        }),
        DesignSpec::Quadratic => {
            if gains.locations().is_empty() {
                return Err(Error::param("quadratic design needs grid locations"));
            }
            Ok(RealizedDesigns {
                designs: vec![quadratic_design(gains.locations(), radio, geom)?],
                sdr: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{end_to_end_channel, ChannelRealization};
    use crate::geometry::Direction;
    use crate::irs::broadside_scale;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn geom() -> IrsGeometry {
        IrsGeometry::new(8, 8, 0.05, 0.05, 0.1).unwrap()
    }

    fn radio() -> RadioConfig {
        RadioConfig {
            wavelength: 0.1,
            bs_distance: 30.0,
            bs_direction: Direction::new(0.0, PI / 2.0).unwrap(),
            bs_antennas: 16,
            tx_power: 0.631,
            noise_power: 3.16e-13,
            sync_length: 32,
        }
    }

    fn random_phases(rng: &mut ChaCha8Rng, n: usize) -> PhaseShiftVector {
        PhaseShiftVector::from_phases(&(0..n).map(|_| rng.random_range(-PI..PI)).collect::<Vec<_>>())
    }

    #[test]
    fn gains_reproduce_end_to_end_channel() {
        let g = geom();
        let r = radio();
        let ucf = UnitCellFactorModel::CosineProduct { gain_scale: 0.3 };
        let grid = vec![
            CartesianPoint::new(-10.0, -50.0, 50.0),
            CartesianPoint::new(-10.0, -35.0, 65.0),
            CartesianPoint::new(-12.0, -61.0, 38.0),
        ];
        let gains = build_gain_matrices(&grid, &r, &g, &ucf).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (q, &p) in grid.iter().enumerate() {
            let w = random_phases(&mut rng, 64);
            let (h0, dir) = device_irs_los(p, r.wavelength).unwrap();
            let h = end_to_end_channel(&ChannelRealization::line_of_sight(h0, dir), &w, &r, &g, &ucf).unwrap();
            assert_relative_eq!(gains.gain(q, w.coefficients()), h.norm_sqr(), max_relative = 1e-10);
        }
    }

    #[test]
    fn effective_vectors_have_uniform_magnitude() {
        let g = geom();
        let r = radio();
        let ucf = UnitCellFactorModel::default_for(&g);
        let p = CartesianPoint::new(-10.0, -50.0, 50.0);
        let gains = build_gain_matrices(&[p], &r, &g, &ucf).unwrap();
        let lambda = r.wavelength;
        let expect = lambda / (4.0 * PI * 30.0) * lambda / (4.0 * PI * p.norm()) * broadside_scale(&g);
        for a in &gains.vectors()[0] {
            assert_relative_eq!(a.norm(), expect, max_relative = 1e-12);
        }
        // Phase-matched w attains (sum |a_u|)^2.
        let w = PhaseShiftVector::project(&gains.vectors()[0]);
        assert_relative_eq!(gains.gain(0, w.coefficients()), (expect * 64.0).powi(2), max_relative = 1e-12);
    }

    #[test]
    fn uniform_w_at_broadside_point() {
        // Device straight above the IRS normal, BS at broadside too.
        let g = geom();
        let mut r = radio();
        r.bs_direction = Direction::new(0.0, 0.0).unwrap();
        let ucf = UnitCellFactorModel::Constant { value: 1.5 };
        let p = CartesianPoint::new(0.0, 0.0, 40.0);
        let gains = build_gain_matrices(&[p], &r, &g, &ucf).unwrap();
        let c = r.wavelength / (4.0 * PI * 30.0) * r.wavelength / (4.0 * PI * 40.0) * 1.5;
        let (gain, q) = worst_case_gain(&PhaseShiftVector::uniform(64), &gains).unwrap();
        assert_eq!(q, 0);
        assert_relative_eq!(gain, c * c * 64.0 * 64.0, max_relative = 1e-12);
    }

    #[test]
    fn trace_product_matches_rank_one_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let vecs: Vec<Vec<Complex64>> = (0..3)
            .map(|_| (0..5).map(|_| Complex64::new(rng.random(), rng.random())).collect())
            .collect();
        let gains = GainMatrixSet::from_vectors(vecs).unwrap();
        let w = random_phases(&mut rng, 5);
        let v = nalgebra::DVector::from_column_slice(w.coefficients());
        let big_w = &v * v.adjoint();
        for q in 0..3 {
            assert_relative_eq!(gains.trace_product(q, &big_w), gains.gain(q, w.coefficients()), max_relative = 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        let g = geom();
        assert!(DesignSpec::Linear { tile_count: 3 }.validate(&g).is_err());
        assert!(DesignSpec::Linear { tile_count: 0 }.validate(&g).is_err());
        assert!(DesignSpec::Linear { tile_count: 4 }.validate(&g).is_ok());
        let bad = DesignSpec::Optimized {
            randomization_count: 0,
            seed: 1,
            repetitions: 1,
        };
        assert!(bad.validate(&g).is_err());
        assert_eq!(DesignSpec::Linear { tile_count: 4 }.label(), "linear4");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let gains = GainMatrixSet::from_vectors(vec![vec![Complex64::new(1.0, 0.0); 4]]).unwrap();
        assert!(worst_case_gain(&PhaseShiftVector::uniform(3), &gains).is_err());
        assert!(GainMatrixSet::from_vectors(vec![vec![Complex64::new(1.0, 0.0)], vec![]]).is_err());
    }

    proptest! {
        #[test]
        fn global_phase_invariance(seed in any::<u64>(), rot in -PI..PI) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vecs: Vec<Vec<Complex64>> = (0..4)
                .map(|_| (0..6).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
                .collect();
            let gains = GainMatrixSet::from_vectors(vecs).unwrap();
            let w = random_phases(&mut rng, 6);
            let (a, _) = worst_case_gain(&w, &gains).unwrap();
            let (b, _) = worst_case_gain(&w.rotated(rot), &gains).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-300));
        }
    }
}
