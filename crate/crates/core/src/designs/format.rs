//! Plain-text design files.
//!
//! ```text
//! # irsdet design
//! # variant: linear
//! # tiles: 4
//! # scenario: 3f2a...
//! -3 -3 1.2345
//! ...
//! ```
//!
//! One data line per cell, `u_x u_y phase_radians`, in linear cell order.
//! Phases are written with the shortest round-trip representation, so
//! parsing recovers the written phases exactly.

use std::fmt::Write as _;

use crate::geometry::{linear_cell_index, IrsGeometry};
use crate::irs::PhaseShiftVector;
use crate::{Error, Result};

use super::DesignSpec;

const MAGIC: &str = "# irsdet design";

#[derive(Debug, Clone, PartialEq)]
pub struct DesignFile {
    /// Header fields in file order, e.g. `("variant", "linear")`.
    pub header: Vec<(String, String)>,
    pub w: PhaseShiftVector,
}

impl DesignFile {
    pub fn field(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub fn write_design(
    w: &PhaseShiftVector,
    spec: &DesignSpec,
    scenario_hash: &str,
    geom: &IrsGeometry,
) -> Result<String> {
    if w.len() != geom.cell_count() {
        return Err(Error::Dimension {
            expected: geom.cell_count(),
            actual: w.len(),
        });
    }
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    match *spec {
        DesignSpec::Optimized {
            randomization_count,
            seed,
            ..
        } => {
            let _ = writeln!(out, "# variant: optimized");
            let _ = writeln!(out, "# G: {randomization_count}");
            let _ = writeln!(out, "# seed: {seed}");
        }
        DesignSpec::Linear { tile_count } => {
            let _ = writeln!(out, "# variant: linear");
            let _ = writeln!(out, "# tiles: {tile_count}");
        }
        DesignSpec::Quadratic => {
            let _ = writeln!(out, "# variant: quadratic");
        }
    }
    let _ = writeln!(out, "# scenario: {scenario_hash}");
    let _ = writeln!(out, "# u_x u_y phase");
    for ((ux, uy), phase) in geom.cell_indices().zip(w.phases()) {
        let _ = writeln!(out, "{ux} {uy} {phase}");
    }
    Ok(out)
}

fn format_error(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("line {line}: {msg}"))
}

pub fn parse_design(text: &str, geom: &IrsGeometry) -> Result<DesignFile> {
    let mut header = Vec::new();
    let mut phases: Vec<Option<f64>> = vec![None; geom.cell_count()];
    let mut saw_magic = false;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if line == MAGIC {
                saw_magic = true;
            } else if let Some((k, v)) = rest.split_once(':') {
                header.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(format_error(n, format!("expected 3 fields, found {}", fields.len())));
        }
        let ux: i64 = fields[0]
            .parse()
            .map_err(|e| format_error(n, format!("bad u_x: {e}")))?;
        let uy: i64 = fields[1]
            .parse()
            .map_err(|e| format_error(n, format!("bad u_y: {e}")))?;
        let phase: f64 = fields[2]
            .parse()
            .map_err(|e| format_error(n, format!("bad phase: {e}")))?;
        if !phase.is_finite() {
            return Err(format_error(n, "phase is not finite"));
        }
        let u = linear_cell_index(ux, uy, geom).map_err(|e| format_error(n, e))?;
        if phases[u].replace(phase).is_some() {
            return Err(format_error(n, format!("duplicate cell ({ux}, {uy})")));
        }
    }
    if !saw_magic {
        return Err(Error::Format("missing design header".into()));
    }
    let missing = phases.iter().filter(|p| p.is_none()).count();
    if missing > 0 {
        return Err(Error::Dimension {
            expected: geom.cell_count(),
            actual: geom.cell_count() - missing,
        });
    }
    let phases: Vec<f64> = phases.into_iter().map(Option::unwrap).collect();
    Ok(DesignFile {
        header,
        w: PhaseShiftVector::from_phases(&phases),
    })
}
