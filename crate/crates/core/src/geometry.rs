//! Coordinate systems, unit-cell indexing and the coverage-area grid.
//!
//! The IRS lies in the xy-plane with its center at the origin. Directions are
//! spherical angles seen from that origin: `theta` from the +z axis and `phi`
//! in the xy-plane. All angles are radians.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Incident or reflection direction on the IRS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    /// Strict constructor: `theta` must lie in `[0, pi]`, `phi` in `(-pi, pi]`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !theta.is_finite() {
            return Err(Error::Geometry(format!("theta {theta} outside [0, pi]")));
        }
        if !(phi > -PI && phi <= PI) {
            return Err(Error::Geometry(format!("phi {phi} outside (-pi, pi]")));
        }
        Ok(Self { theta, phi })
    }

    /// Clamps `theta` into `[0, pi]` and wraps `phi` into `(-pi, pi]`.
    pub fn clamped(theta: f64, phi: f64) -> Self {
        Self {
            theta: theta.clamp(0.0, PI),
            phi: wrap_angle(phi),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Unit vector pointing along this direction.
    pub fn unit_vector(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(st * cp, st * sp, ct)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    // rem_euclid can return exactly 2*pi for tiny negative inputs
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn norm(self) -> f64 {
        self.to_vector().norm()
    }

    /// Point at distance `d` along `dir`.
    pub fn from_spherical(dir: Direction, d: f64) -> Self {
        let v = dir.unit_vector() * d;
        Self::new(v.x, v.y, v.z)
    }
}

/// Planar IRS layout: `u_count_x * u_count_y` cells on a rectangular lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrsGeometry {
    pub u_count_x: usize,
    pub u_count_y: usize,
    pub spacing_x: f64,
    pub spacing_y: f64,
    pub wavelength: f64,
}

impl IrsGeometry {
    pub fn new(
        u_count_x: usize,
        u_count_y: usize,
        spacing_x: f64,
        spacing_y: f64,
        wavelength: f64,
    ) -> Result<Self> {
        let g = Self {
            u_count_x,
            u_count_y,
            spacing_x,
            spacing_y,
            wavelength,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.u_count_x == 0 || self.u_count_y == 0 {
            return Err(Error::param("IRS cell counts must be positive"));
        }
        if self.u_count_x % 2 != 0 || self.u_count_y % 2 != 0 {
            return Err(Error::param(format!(
                "IRS cell counts must be even, got {}x{}",
                self.u_count_x, self.u_count_y
            )));
        }
        for (name, v) in [
            ("spacing_x", self.spacing_x),
            ("spacing_y", self.spacing_y),
            ("wavelength", self.wavelength),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Total number of unit cells U.
    pub fn cell_count(&self) -> usize {
        self.u_count_x * self.u_count_y
    }

    /// Smallest and largest x index (`-U_x/2 + 1`, `U_x/2`).
    pub fn x_index_range(&self) -> (i64, i64) {
        let h = (self.u_count_x / 2) as i64;
        (1 - h, h)
    }

    pub fn y_index_range(&self) -> (i64, i64) {
        let h = (self.u_count_y / 2) as i64;
        (1 - h, h)
    }

    /// Iterates `(u_x, u_y)` in linear cell order.
    pub fn cell_indices(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.cell_count()).map(move |u| {
            unit_cell_index(u, self).expect("index within cell count")
        })
    }

    /// Cell positions in linear cell order.
    pub fn cell_positions(&self) -> Vec<CartesianPoint> {
        self.cell_indices()
            .map(|(ux, uy)| CartesianPoint::new(self.spacing_x * ux as f64, self.spacing_y * uy as f64, 0.0))
            .collect()
    }
}

/// Two-dimensional index `(u_x, u_y)` of linear cell `u`.
pub fn unit_cell_index(u: usize, geom: &IrsGeometry) -> Result<(i64, i64)> {
    let count = geom.cell_count();
    if u >= count {
        return Err(Error::IndexOutOfRange {
            index: u as i64,
            count,
        });
    }
    let ux = (u % geom.u_count_x) as i64 - (geom.u_count_x / 2) as i64 + 1;
    let uy = (u / geom.u_count_x) as i64 - (geom.u_count_y / 2) as i64 + 1;
    Ok((ux, uy))
}

/// Inverse of [`unit_cell_index`].
pub fn linear_cell_index(ux: i64, uy: i64, geom: &IrsGeometry) -> Result<usize> {
    let (xlo, xhi) = geom.x_index_range();
    let (ylo, yhi) = geom.y_index_range();
    if !(xlo..=xhi).contains(&ux) {
        return Err(Error::IndexOutOfRange {
            index: ux,
            count: geom.cell_count(),
        });
    }
    if !(ylo..=yhi).contains(&uy) {
        return Err(Error::IndexOutOfRange {
            index: uy,
            count: geom.cell_count(),
        });
    }
    Ok((uy - ylo) as usize * geom.u_count_x + (ux - xlo) as usize)
}

/// Position `(d_x u_x, d_y u_y, 0)` of cell `(u_x, u_y)`.
pub fn unit_cell_position(ux: i64, uy: i64, geom: &IrsGeometry) -> Result<CartesianPoint> {
    linear_cell_index(ux, uy, geom)?;
    Ok(CartesianPoint::new(
        geom.spacing_x * ux as f64,
        geom.spacing_y * uy as f64,
        0.0,
    ))
}

/// Wave vector `(2 pi / lambda) * unit(dir)` in rad/m.
pub fn wave_vector(dir: Direction, wavelength: f64) -> Result<Vector3<f64>> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::param(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    Ok(dir.unit_vector() * (2.0 * PI / wavelength))
}

/// Spherical direction and distance of `p` as seen from the IRS center.
/// On the z axis `phi` is reported as 0.
pub fn direction_and_distance(p: CartesianPoint) -> Result<(Direction, f64)> {
    let d = p.norm();
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Geometry(format!(
            "point ({}, {}, {}) has no direction",
            p.x, p.y, p.z
        )));
    }
    let theta = (p.z / d).clamp(-1.0, 1.0).acos();
    let phi = if p.x == 0.0 && p.y == 0.0 {
        0.0
    } else {
        let a = p.y.atan2(p.x);
        if a == -PI {
            PI
        } else {
            a
        }
    };
    Ok((Direction { theta, phi }, d))
}

/// Rectangular coverage area parallel to the yz-plane, sampled on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageArea {
    pub center: CartesianPoint,
    pub extent_y: f64,
    pub extent_z: f64,
    pub grid_ny: usize,
    pub grid_nz: usize,
}

impl CoverageArea {
    pub fn validate(&self) -> Result<()> {
        if !(self.extent_y >= 0.0 && self.extent_z >= 0.0) {
            return Err(Error::param("coverage extents must be non-negative"));
        }
        if self.grid_ny == 0 || self.grid_nz == 0 {
            return Err(Error::param("coverage grid counts must be at least 1"));
        }
        Ok(())
    }

    pub fn with_grid(mut self, ny: usize, nz: usize) -> Self {
        self.grid_ny = ny;
        self.grid_nz = nz;
        self
    }

    pub fn with_extent(mut self, extent: f64) -> Self {
        self.extent_y = extent;
        self.extent_z = extent;
        self
    }

    /// Membership test for the continuous area (x fixed at the center).
    pub fn contains(&self, p: CartesianPoint, tol: f64) -> bool {
        (p.x - self.center.x).abs() <= tol
            && (p.y - self.center.y).abs() <= 0.5 * self.extent_y + tol
            && (p.z - self.center.z).abs() <= 0.5 * self.extent_z + tol
    }
}

fn axis_samples(center: f64, extent: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![center];
    }
    let lo = center - 0.5 * extent;
    let step = extent / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { center + 0.5 * extent } else { lo + step * i as f64 })
        .collect()
}

/// Grid points of `area`, row-major in `(y, z)`: the z index varies fastest.
/// Both interval endpoints are included.
pub fn coverage_grid(area: &CoverageArea) -> Vec<CartesianPoint> {
    let ys = axis_samples(area.center.y, area.extent_y, area.grid_ny);
    let zs = axis_samples(area.center.z, area.extent_z, area.grid_nz);
    ys.iter()
        .flat_map(|&y| zs.iter().map(move |&z| CartesianPoint::new(area.center.x, y, z)))
        .collect()
}
