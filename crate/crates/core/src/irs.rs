//! IRS steering vectors, unit-cell factor and the reflected-field response.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{wave_vector, Direction, IrsGeometry};
use crate::{Error, Result};

/// Tolerance on `|w_u| = 1`.
pub const UNIT_MODULUS_TOL: f64 = 1e-12;

/// Phase-shift configuration: one unit-modulus coefficient per cell, in
/// linear cell order.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftVector {
    coefficients: Vec<Complex64>,
}

impl PhaseShiftVector {
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self> {
        if let Some((u, c)) = coefficients
            .iter()
            .enumerate()
            .find(|(_, c)| !((c.norm() - 1.0).abs() <= UNIT_MODULUS_TOL))
        {
            return Err(Error::param(format!(
                "coefficient {u} has modulus {} (expected 1)",
                c.norm()
            )));
        }
        Ok(Self { coefficients })
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        Self {
            coefficients: phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect(),
        }
    }

    /// All-ones configuration (every cell at phase zero).
    pub fn uniform(count: usize) -> Self {
        Self {
            coefficients: vec![Complex64::new(1.0, 0.0); count],
        }
    }

    /// Projects arbitrary complex entries onto the unit circle; exact zeros
    /// map to phase 0.
    pub fn project(entries: &[Complex64]) -> Self {
        let coefficients = entries
            .iter()
            .map(|v| {
                let n = v.norm();
                if n == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    v / n
                }
            })
            .collect();
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn phases(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.arg()).collect()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Same configuration multiplied by a common phase.
    pub fn rotated(&self, phase: f64) -> Self {
        let r = Complex64::from_polar(1.0, phase);
        Self {
            coefficients: self.coefficients.iter().map(|c| c * r).collect(),
        }
    }
}

/// Per-cell phase profile induced by an incident/reflection direction pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub entries: Vec<Complex64>,
}

/// Direction-dependent gain of a single cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum UnitCellFactorModel {
    /// Direction-independent factor.
    Constant { value: f64 },
    /// `gain_scale * sqrt(cos theta_t * cos theta_r)`, zero beyond grazing.
    CosineProduct { gain_scale: f64 },
}

impl UnitCellFactorModel {
    /// Constant model at the broadside scale of `geom`.
    pub fn default_for(geom: &IrsGeometry) -> Self {
        UnitCellFactorModel::Constant {
            value: broadside_scale(geom),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            UnitCellFactorModel::Constant { value } => value,
            UnitCellFactorModel::CosineProduct { gain_scale } => gain_scale,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::param(format!("unit-cell factor scale must be positive, got {v}")))
        }
    }
}

/// Broadside unit-cell amplitude `sqrt(4 pi) d_x d_y / lambda`.
pub fn broadside_scale(geom: &IrsGeometry) -> f64 {
    (4.0 * PI).sqrt() * geom.spacing_x * geom.spacing_y / geom.wavelength
}

/// Aperture gain `4 pi d_x d_y / lambda^2` of one cell (the flat-plate
/// radar-equation normalization). Available as a constant model value.
pub fn aperture_scale(geom: &IrsGeometry) -> f64 {
    4.0 * PI * geom.spacing_x * geom.spacing_y / (geom.wavelength * geom.wavelength)
}

/// Sum of the incident and reflection wave vectors.
pub(crate) fn combined_wave_vector(
    incident: Direction,
    reflect: Direction,
    wavelength: f64,
) -> Result<Vector3<f64>> {
    Ok(wave_vector(incident, wavelength)? + wave_vector(reflect, wavelength)?)
}

pub fn steering_vector(incident: Direction, reflect: Direction, geom: &IrsGeometry) -> SteeringVector {
    let k = combined_wave_vector(incident, reflect, geom.wavelength)
        .expect("geometry wavelength validated");
    SteeringVector {
        entries: geom
            .cell_positions()
            .iter()
            .map(|c| Complex64::from_polar(1.0, -k.dot(&c.to_vector())))
            .collect(),
    }
}

pub fn unit_cell_factor(incident: Direction, reflect: Direction, model: &UnitCellFactorModel) -> f64 {
    match *model {
        UnitCellFactorModel::Constant { value } => value,
        UnitCellFactorModel::CosineProduct { gain_scale } => {
            let c = incident.theta().cos().max(0.0) * reflect.theta().cos().max(0.0);
            gain_scale * c.sqrt()
        }
    }
}

/// `upsilon * a^H w` for the given direction pair.
pub fn irs_response(
    incident: Direction,
    reflect: Direction,
    w: &PhaseShiftVector,
    geom: &IrsGeometry,
    model: &UnitCellFactorModel,
) -> Result<Complex64> {
    if w.len() != geom.cell_count() {
        return Err(Error::Dimension {
            expected: geom.cell_count(),
            actual: w.len(),
        });
    }
    let a = steering_vector(incident, reflect, geom);
    let af: Complex64 = a
        .entries
        .iter()
        .zip(w.coefficients())
        .map(|(a, w)| a.conj() * w)
        .sum();
    Ok(af * unit_cell_factor(incident, reflect, model))
}
