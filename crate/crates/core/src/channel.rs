//! Free-space IRS-BS and device-IRS links, scattered paths and the
//! end-to-end channel seen after the BS matched filter.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{direction_and_distance, CartesianPoint, Direction, IrsGeometry};
use crate::irs::{irs_response, PhaseShiftVector, UnitCellFactorModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    /// Meters.
    pub wavelength: f64,
    /// IRS-BS distance in meters.
    pub bs_distance: f64,
    pub bs_direction: Direction,
    pub bs_antennas: usize,
    /// Per-symbol transmit power in watts.
    pub tx_power: f64,
    /// Noise power in watts.
    pub noise_power: f64,
    /// Synchronization sequence length in symbols.
    pub sync_length: usize,
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("bs_distance", self.bs_distance),
            ("tx_power", self.tx_power),
            ("noise_power", self.noise_power),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        if self.bs_antennas == 0 {
            return Err(Error::param("bs_antennas must be positive"));
        }
        if self.sync_length < 2 {
            return Err(Error::param(format!(
                "sync_length must exceed 1, got {}",
                self.sync_length
            )));
        }
        Ok(())
    }
}

/// Scattered-path model of the device-IRS link: `path_count - 1` Rayleigh
/// paths sharing `power_ratio` times the LoS power, with incident directions
/// perturbed around the LoS direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterModel {
    pub path_count: usize,
    pub power_ratio: f64,
    /// Radians, applied independently to theta and phi.
    pub direction_stddev: f64,
}

impl ScatterModel {
    pub fn line_of_sight() -> Self {
        Self {
            path_count: 1,
            power_ratio: 0.0,
            direction_stddev: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.path_count == 0 {
            return Err(Error::param("path_count must be at least 1"));
        }
        if !(self.power_ratio >= 0.0 && self.power_ratio.is_finite()) {
            return Err(Error::param("power_ratio must be non-negative"));
        }
        if self.path_count == 1 && self.power_ratio != 0.0 {
            return Err(Error::param("power_ratio must be 0 for a single path"));
        }
        if !(self.direction_stddev >= 0.0 && self.direction_stddev.is_finite()) {
            return Err(Error::param("direction_stddev must be non-negative"));
        }
        Ok(())
    }

    /// Mean power of each scattered path relative to the LoS power.
    pub fn per_path_ratio(&self) -> f64 {
        if self.path_count <= 1 {
            0.0
        } else {
            self.power_ratio / (self.path_count - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub los_coefficient: Complex64,
    pub los_direction: Direction,
    pub nlos_coefficients: Vec<Complex64>,
    pub nlos_directions: Vec<Direction>,
}

impl ChannelRealization {
    pub fn line_of_sight(coefficient: Complex64, direction: Direction) -> Self {
        Self {
            los_coefficient: coefficient,
            los_direction: direction,
            nlos_coefficients: Vec::new(),
            nlos_directions: Vec::new(),
        }
    }

    pub fn path_count(&self) -> usize {
        1 + self.nlos_coefficients.len()
    }
}

/// Free-space coefficient `lambda / (4 pi d) * exp(j 2 pi d / lambda)`.
pub fn free_space(distance: f64, wavelength: f64) -> Complex64 {
    let phase = (2.0 * PI * distance / wavelength).rem_euclid(2.0 * PI);
    Complex64::from_polar(wavelength / (4.0 * PI * distance), phase)
}

/// Scalar IRS-BS coefficient `h_r`.
pub fn irs_bs_channel(radio: &RadioConfig) -> Complex64 {
    free_space(radio.bs_distance, radio.wavelength)
}

/// LoS coefficient and incident direction for a device at `q`.
pub fn device_irs_los(q: CartesianPoint, wavelength: f64) -> Result<(Complex64, Direction)> {
    let (dir, d) = direction_and_distance(q)?;
    Ok((free_space(d, wavelength), dir))
}

/// Draws the scattered paths around a given LoS path.
pub fn sample_scattered_paths<R: Rng + ?Sized>(
    los: (Complex64, Direction),
    model: &ScatterModel,
    rng: &mut R,
) -> ChannelRealization {
    let (h0, dir0) = los;
    let n = model.path_count.saturating_sub(1);
    let variance = model.per_path_ratio() * h0.norm_sqr();
    let sigma = (0.5 * variance).sqrt();
    let angle = Normal::new(0.0, model.direction_stddev).expect("stddev validated");
    let mut coeffs = Vec::with_capacity(n);
    let mut dirs = Vec::with_capacity(n);
    for _ in 0..n {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        coeffs.push(Complex64::new(sigma * re, sigma * im));
        let dt = angle.sample(rng);
        let dp = angle.sample(rng);
        dirs.push(Direction::clamped(dir0.theta() + dt, dir0.phi() + dp));
    }
    ChannelRealization {
        los_coefficient: h0,
        los_direction: dir0,
        nlos_coefficients: coeffs,
        nlos_directions: dirs,
    }
}

/// End-to-end scalar channel `h_r * sum_l g(Psi_l, Psi_r) h_l`.
pub fn end_to_end_channel(
    realization: &ChannelRealization,
    w: &PhaseShiftVector,
    radio: &RadioConfig,
    geom: &IrsGeometry,
    ucf: &UnitCellFactorModel,
) -> Result<Complex64> {
    if w.len() != geom.cell_count() {
        return Err(Error::Dimension {
            expected: geom.cell_count(),
            actual: w.len(),
        });
    }
    let reflect = radio.bs_direction;
    let mut sum = irs_response(realization.los_direction, reflect, w, geom, ucf)?
        * realization.los_coefficient;
    for (h, dir) in realization
        .nlos_coefficients
        .iter()
        .zip(&realization.nlos_directions)
    {
        if *h == Complex64::new(0.0, 0.0) {
            continue;
        }
        sum += irs_response(*dir, reflect, w, geom, ucf)? * h;
    }
    Ok(irs_bs_channel(radio) * sum)
}
