//! Closed-form designs built from phase gradients.
//!
//! A cell at `c_u = (d_x u_x, d_y u_y, 0)` gets phase `c_u . grad` where
//! `grad = -(k_t + k_r)` steers the reflected beam from direction `t`
//! towards the BS. Only the x and y components matter on the planar IRS.

use std::ops::RangeInclusive;

use nalgebra::Vector3;

use crate::channel::RadioConfig;
use crate::geometry::{direction_and_distance, CartesianPoint, CoverageArea, IrsGeometry};
use crate::irs::{combined_wave_vector, PhaseShiftVector};
use crate::{Error, Result};

fn target_gradient(p: CartesianPoint, radio: &RadioConfig) -> Result<Vector3<f64>> {
    let (dir, _) = direction_and_distance(p)?;
    Ok(-combined_wave_vector(dir, radio.bs_direction, radio.wavelength)?)
}

/// `u_y` rows of tile `k` out of `tiles`.
pub fn tile_rows(k: usize, tiles: usize, geom: &IrsGeometry) -> Result<RangeInclusive<i64>> {
    if tiles == 0 || geom.u_count_y % tiles != 0 || k >= tiles {
        return Err(Error::param(format!(
            "tile {k} of {tiles} invalid for U_y = {}",
            geom.u_count_y
        )));
    }
    let rows = (geom.u_count_y / tiles) as i64;
    let half = (geom.u_count_y / 2) as i64;
    let k = k as i64;
    Ok(k * rows - half + 1..=(k + 1) * rows - half)
}

pub fn linear_tiled_design(
    tiles: usize,
    area: &CoverageArea,
    radio: &RadioConfig,
    geom: &IrsGeometry,
) -> Result<PhaseShiftVector> {
    if tiles == 0 || geom.u_count_y % tiles != 0 {
        return Err(Error::param(format!(
            "tile count {tiles} must divide U_y = {}",
            geom.u_count_y
        )));
    }
    let slab = area.extent_y / tiles as f64;
    let gradients = (0..tiles)
        .map(|k| {
            let center = CartesianPoint::new(
                area.center.x,
                area.center.y - 0.5 * area.extent_y + (k as f64 + 0.5) * slab,
                area.center.z,
            );
            target_gradient(center, radio)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = (geom.u_count_y / tiles) as i64;
    let (ylo, _) = geom.y_index_range();
    let phases: Vec<f64> = geom
        .cell_indices()
        .map(|(ux, uy)| {
            let g = &gradients[((uy - ylo) / rows) as usize];
            geom.spacing_x * ux as f64 * g.x + geom.spacing_y * uy as f64 * g.y
        })
        .collect();
    Ok(PhaseShiftVector::from_phases(&phases))
}

/// Affine gradient `alpha u + beta` matching `lo` at `u_min` and `hi` at `u_max`.
fn affine_fit(lo: f64, hi: f64, u_min: i64, u_max: i64) -> (f64, f64) {
    let alpha = (hi - lo) / (u_max - u_min) as f64;
    (alpha, lo - alpha * u_min as f64)
}

/// Per-axis `(alpha, beta)` of the quadratic design.
pub(crate) fn quadratic_coefficients(
    grid: &[CartesianPoint],
    radio: &RadioConfig,
    geom: &IrsGeometry,
) -> Result<[(f64, f64); 2]> {
    if grid.is_empty() {
        return Err(Error::param("quadratic design needs a nonempty grid"));
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for &p in grid {
        let g = target_gradient(p, radio)?;
        for axis in 0..2 {
            lo[axis] = lo[axis].min(g[axis]);
            hi[axis] = hi[axis].max(g[axis]);
        }
    }
    let (xlo, xhi) = geom.x_index_range();
    let (ylo, yhi) = geom.y_index_range();
    Ok([
        affine_fit(lo[0], hi[0], xlo, xhi),
        affine_fit(lo[1], hi[1], ylo, yhi),
    ])
}

pub fn quadratic_design(
    grid: &[CartesianPoint],
    radio: &RadioConfig,
    geom: &IrsGeometry,
) -> Result<PhaseShiftVector> {
    let [(ax, bx), (ay, by)] = quadratic_coefficients(grid, radio, geom)?;
    let phases: Vec<f64> = geom
        .cell_indices()
        .map(|(ux, uy)| {
            let (ux, uy) = (ux as f64, uy as f64);
            geom.spacing_x * ux * (ax * ux + bx) + geom.spacing_y * uy * (ay * uy + by)
        })
        .collect();
    Ok(PhaseShiftVector::from_phases(&phases))
}
