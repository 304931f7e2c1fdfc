//! TOML scenario files: degrees, dBm and dB at the boundary, converted to
//! radians and watts for the library.

use std::path::Path;

use irsdet::channel::{RadioConfig, ScatterModel};
use irsdet::designs::DesignSpec;
use irsdet::detector::DetectorConfig;
use irsdet::geometry::{CartesianPoint, CoverageArea, Direction, IrsGeometry};
use irsdet::irs::{broadside_scale, UnitCellFactorModel};
use irsdet::simulation::{NoiseComposition, ScenarioConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub master_seed: u64,
    pub irs: IrsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_cell: Option<UnitCellSection>,
    pub area: AreaSection,
    pub base_station: BaseStationSection,
    pub signal: SignalSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    pub design: DesignSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatter: Option<ScatterSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrsSection {
    pub cells_x: usize,
    pub cells_y: usize,
    /// Meters.
    pub spacing_x: f64,
    pub spacing_y: f64,
    pub wavelength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitCellKind {
    Constant,
    CosineProduct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitCellSection {
    pub model: UnitCellKind,
    /// Broadside amplitude; defaults to `sqrt(4 pi) d_x d_y / lambda`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaSection {
    pub center: [f64; 3],
    pub extent_y: f64,
    pub extent_z: f64,
    /// `[ny, nz]` design-grid points.
    pub grid: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseStationSection {
    pub distance: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub antennas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub sync_length: usize,
    pub false_alarm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub density_dbm_per_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSection {
    Optimized {
        randomizations: usize,
        seed: u64,
        repetitions: usize,
    },
    Linear {
        tiles: usize,
    },
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSection {
    pub paths: usize,
    pub power_ratio: f64,
    pub direction_stddev_deg: f64,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Finds a boundary value that maps exactly onto `target` under `forward`,
/// starting from the approximate inverse `guess`. Falls back to the guess.
fn exact_preimage(target: f64, guess: f64, forward: impl Fn(f64) -> f64) -> f64 {
    let mut lo = guess;
    let mut hi = guess;
    for _ in 0..=16 {
        if forward(lo) == target {
            return lo;
        }
        if forward(hi) == target {
            return hi;
        }
        lo = lo.next_down();
        hi = hi.next_up();
    }
    guess
}

fn deg(rad: f64) -> f64 {
    exact_preimage(rad, rad.to_degrees(), f64::to_radians)
}

fn dbm(watts: f64) -> f64 {
    exact_preimage(watts, 10.0 * watts.log10() + 30.0, dbm_to_watts)
}

fn db(linear: f64) -> f64 {
    exact_preimage(linear, 10.0 * linear.log10(), db_to_linear)
}

impl ScenarioFile {
    pub fn to_config(&self) -> Result<ScenarioConfig, irsdet::Error> {
        let geom = IrsGeometry::new(
            self.irs.cells_x,
            self.irs.cells_y,
            self.irs.spacing_x,
            self.irs.spacing_y,
            self.irs.wavelength,
        )?;
        let noise_power = dbm_to_watts(self.signal.noise_power_dbm);
        let radio = RadioConfig {
            wavelength: self.irs.wavelength,
            bs_distance: self.base_station.distance,
            bs_direction: Direction::new(
                self.base_station.theta_deg.to_radians(),
                self.base_station.phi_deg.to_radians(),
            )?,
            bs_antennas: self.base_station.antennas,
            tx_power: dbm_to_watts(self.signal.tx_power_dbm),
            noise_power,
            sync_length: self.signal.sync_length,
        };
        let ucf = match &self.unit_cell {
            None => UnitCellFactorModel::default_for(&geom),
            Some(s) => {
                let scale = s.scale.unwrap_or_else(|| broadside_scale(&geom));
                match s.model {
                    UnitCellKind::Constant => UnitCellFactorModel::Constant { value: scale },
                    UnitCellKind::CosineProduct => UnitCellFactorModel::CosineProduct { gain_scale: scale },
                }
            }
        };
        let design = match self.design {
            DesignSection::Optimized {
                randomizations,
                seed,
                repetitions,
            } => DesignSpec::Optimized {
                randomization_count: randomizations,
                seed,
                repetitions,
            },
            DesignSection::Linear { tiles } => DesignSpec::Linear { tile_count: tiles },
            DesignSection::Quadratic => DesignSpec::Quadratic,
        };
        let scatter = match &self.scatter {
            None => ScatterModel::line_of_sight(),
            Some(s) => ScatterModel {
                path_count: s.paths,
                power_ratio: s.power_ratio,
                direction_stddev: s.direction_stddev_deg.to_radians(),
            },
        };
        let [cx, cy, cz] = self.area.center;
        let config = ScenarioConfig {
            geom,
            area: CoverageArea {
                center: CartesianPoint::new(cx, cy, cz),
                extent_y: self.area.extent_y,
                extent_z: self.area.extent_z,
                grid_ny: self.area.grid[0],
                grid_nz: self.area.grid[1],
            },
            radio,
            detector: DetectorConfig::new(self.signal.false_alarm, noise_power)?,
            design,
            scatter,
            master_seed: self.master_seed,
            ucf,
            noise: self.noise.as_ref().map(|n| NoiseComposition {
                density: dbm_to_watts(n.density_dbm_per_hz),
                bandwidth: n.bandwidth_hz,
                noise_figure: db_to_linear(n.noise_figure_db),
            }),
        };
        config.validate()?;
        Ok(config)
    }

    /// Boundary representation of `config`, chosen so that converting it
    /// back reproduces `config` exactly.
    pub fn from_config(config: &ScenarioConfig) -> Self {
        let (model, scale) = match config.ucf {
            UnitCellFactorModel::Constant { value } => (UnitCellKind::Constant, value),
            UnitCellFactorModel::CosineProduct { gain_scale } => (UnitCellKind::CosineProduct, gain_scale),
        };
        let c = config.area.center;
        Self {
            master_seed: config.master_seed,
            irs: IrsSection {
                cells_x: config.geom.u_count_x,
                cells_y: config.geom.u_count_y,
                spacing_x: config.geom.spacing_x,
                spacing_y: config.geom.spacing_y,
                wavelength: config.geom.wavelength,
            },
            unit_cell: Some(UnitCellSection {
                model,
                scale: Some(scale),
            }),
            area: AreaSection {
                center: [c.x, c.y, c.z],
                extent_y: config.area.extent_y,
                extent_z: config.area.extent_z,
                grid: [config.area.grid_ny, config.area.grid_nz],
            },
            base_station: BaseStationSection {
                distance: config.radio.bs_distance,
                theta_deg: deg(config.radio.bs_direction.theta()),
                phi_deg: deg(config.radio.bs_direction.phi()),
                antennas: config.radio.bs_antennas,
            },
            signal: SignalSection {
                tx_power_dbm: dbm(config.radio.tx_power),
                noise_power_dbm: dbm(config.radio.noise_power),
                sync_length: config.radio.sync_length,
                false_alarm: config.detector.target_false_alarm(),
            },
            noise: config.noise.map(|n| NoiseSection {
                density_dbm_per_hz: dbm(n.density),
                bandwidth_hz: n.bandwidth,
                noise_figure_db: db(n.noise_figure),
            }),
            design: match config.design {
                DesignSpec::Optimized {
                    randomization_count,
                    seed,
                    repetitions,
                } => DesignSection::Optimized {
                    randomizations: randomization_count,
                    seed,
                    repetitions,
                },
                DesignSpec::Linear { tile_count } => DesignSection::Linear { tiles: tile_count },
                DesignSpec::Quadratic => DesignSection::Quadratic,
            },
            scatter: Some(ScatterSection {
                paths: config.scatter.path_count,
                power_ratio: config.scatter.power_ratio,
                direction_stddev_deg: deg(config.scatter.direction_stddev),
            }),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario file serializes")
    }
}

/// 1-based line and column of byte `offset` in `text`.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<ScenarioConfig, CliError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let (line, col) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        CliError::Parse(format!("{origin}:{line}:{col}: {}", e.message().trim()))
    })?;
    file.to_config()
        .map_err(|e| CliError::Parse(format!("{origin}: {e}")))
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TABLE1: &str = include_str!("../scenarios/table1.scenario");

    #[test]
    fn bundled_scenario_matches_reference() {
        let parsed = parse_scenario(TABLE1, "table1").unwrap();
        let reference = ScenarioConfig::table1();
        assert_eq!(parsed.geom, reference.geom);
        assert_eq!(parsed.area, reference.area);
        assert_eq!(parsed.radio, reference.radio);
        assert_eq!(parsed.design, reference.design);
        assert_eq!(parsed.ucf, reference.ucf);
        assert_eq!(parsed.master_seed, reference.master_seed);
        assert_eq!(parsed.scatter.path_count, 5);
        assert!((parsed.scatter.direction_stddev - 0.1).abs() < 1e-15);
    }

    #[test]
    fn conversions() {
        assert!((dbm_to_watts(28.0) / 0.630957344480193 - 1.0).abs() < 1e-12);
        assert!((dbm_to_watts(-95.0) / 3.1622776601683794e-13 - 1.0).abs() < 1e-12);
        assert!((db_to_linear(6.0) / 3.9810717055349722 - 1.0).abs() < 1e-12);
        for w in [1e-13, 0.5, 3.0, 1234.5] {
            assert!((dbm_to_watts(dbm(w)) / w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_keys_rejected_with_position() {
        let bad = TABLE1.replacen("[irs]\n", "[irs]\ncolour = 3\n", 1);
        let err = parse_scenario(&bad, "f.scenario").unwrap_err().to_string();
        assert!(err.contains("f.scenario:"), "{err}");
        assert!(err.contains("colour"), "{err}");
        let line = TABLE1.lines().position(|l| l == "[irs]").unwrap() + 2;
        assert!(err.contains(&format!(":{line}:")), "{err}");
    }

    #[test]
    fn invalid_values_rejected() {
        let bad = TABLE1.replacen("cells_x = 8", "cells_x = 7", 1);
        assert!(matches!(parse_scenario(&bad, "f"), Err(CliError::Parse(_))));
        let bad = TABLE1.replacen("false_alarm = 0.1", "false_alarm = 1.5", 1);
        assert!(parse_scenario(&bad, "f").is_err());
    }

    #[test]
    fn line_column_counts_from_one() {
        assert_eq!(line_column("ab\ncd", 0), (1, 1));
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
    }

    fn arb_file() -> impl Strategy<Value = ScenarioFile> {
        (
            any::<u64>(),
            (1usize..6, 1usize..6, 0.01..0.2f64, 0.01..0.2f64, 0.05..0.5f64),
            (-50.0..50.0f64, -80.0..80.0f64, 10.0..80.0f64, 0.0..60.0f64, 0.0..60.0f64, 1usize..40, 1usize..40),
            (5.0..100.0f64, 0.0..80.0f64, -179.0..180.0f64, 1usize..64),
            (0.0..40.0f64, -120.0..-80.0f64, 2usize..64, 0.01..0.5f64),
            (0u8..3, 1usize..4, any::<u64>()),
            (2usize..8, 0.0..3.0f64, 0.0..20.0f64, any::<bool>()),
        )
            .prop_map(|(seed, irs, area, bs, sig, des, sc)| {
                let (cx, cy, sx, sy, wl) = irs;
                let design = match des.0 {
                    0 => DesignSection::Optimized { randomizations: des.1 * 100, seed: des.2, repetitions: des.1 },
                    1 => DesignSection::Linear { tiles: 1 },
                    _ => DesignSection::Quadratic,
                };
                ScenarioFile {
                    master_seed: seed,
                    irs: IrsSection { cells_x: 2 * cx, cells_y: 2 * cy, spacing_x: sx, spacing_y: sy, wavelength: wl },
                    unit_cell: Some(UnitCellSection {
                        model: if sc.3 { UnitCellKind::Constant } else { UnitCellKind::CosineProduct },
                        scale: Some(sx * sy / wl),
                    }),
                    area: AreaSection { center: [area.0, area.1, area.2], extent_y: area.3, extent_z: area.4, grid: [area.5, area.6] },
                    base_station: BaseStationSection { distance: bs.0, theta_deg: bs.1, phi_deg: bs.2, antennas: bs.3 },
                    signal: SignalSection { tx_power_dbm: sig.0, noise_power_dbm: sig.1, sync_length: sig.2, false_alarm: sig.3 },
                    noise: None,
                    design,
                    scatter: Some(ScatterSection { paths: sc.0, power_ratio: sc.1, direction_stddev_deg: sc.2 }),
                }
            })
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(file in arb_file()) {
            let config = file.to_config().unwrap();
            let emitted = ScenarioFile::from_config(&config).to_toml();
            let again = parse_scenario(&emitted, "emitted").unwrap();
            prop_assert_eq!(&again, &config);
            prop_assert_eq!(again.fingerprint(), config.fingerprint());
            // Text round trip of the file itself.
            let direct = parse_scenario(&file.to_toml(), "direct").unwrap();
            prop_assert_eq!(direct, config);
        }
    }
}
