//! Experiment harness: misdetection maps, design comparisons over area
//! sizes, and Monte-Carlo runs under scattering.
//!
//! Every random quantity comes from a substream keyed by
//! `(master_seed, location, trial)`, so results do not depend on thread
//! count or scheduling. Channel and noise draws use separate streams: a
//! scattering sweep therefore sees the same noise at every power ratio,
//! and a zero ratio reproduces the line-of-sight run bit for bit.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{
    device_irs_los, end_to_end_channel, sample_scattered_paths, ChannelRealization, RadioConfig,
    ScatterModel,
};
use crate::designs::{build_gain_matrices, realize, worst_case_gain, DesignSpec, GainMatrixSet};
use crate::detector::{
    binomial_ci_half_width, decide, misdetection_probability, noncentrality,
    noncentrality_from_gain, synchronization_sequence, DetectionStats, DetectorConfig, StatsKind,
};
use crate::geometry::{coverage_grid, CartesianPoint, CoverageArea, Direction, IrsGeometry};
use crate::irs::{PhaseShiftVector, UnitCellFactorModel};
use crate::rng::{derive_seed, substream, StreamKind};
use crate::{Error, Result};

/// Trials handled by one work item.
const TRIAL_CHUNK: usize = 2048;

/// Largest accepted gap between `sigma^2` and `N_0 B F`, in dB.
pub const NOISE_COMPOSITION_TOL_DB: f64 = 0.05;

fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Noise power as density times bandwidth times noise figure (linear units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseComposition {
    /// W/Hz.
    pub density: f64,
    /// Hz.
    pub bandwidth: f64,
    /// Linear factor (not dB).
    pub noise_figure: f64,
}

impl NoiseComposition {
    pub fn power(&self) -> f64 {
        self.density * self.bandwidth * self.noise_figure
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub geom: IrsGeometry,
    pub area: CoverageArea,
    pub radio: RadioConfig,
    pub detector: DetectorConfig,
    pub design: DesignSpec,
    pub scatter: ScatterModel,
    pub master_seed: u64,
    pub ucf: UnitCellFactorModel,
    pub noise: Option<NoiseComposition>,
}

impl ScenarioConfig {
    /// Reference scenario: 8x8 half-wavelength IRS at 3 GHz, BS at
    /// broadside 30 m away, 30 m x 30 m coverage area.
    pub fn table1() -> Self {
        let wavelength = 0.1;
        let geom = IrsGeometry {
            u_count_x: 8,
            u_count_y: 8,
            spacing_x: wavelength / 2.0,
            spacing_y: wavelength / 2.0,
            wavelength,
        };
        let noise_power = dbm_to_watts(-95.0);
        let radio = RadioConfig {
            wavelength,
            bs_distance: 30.0,
            bs_direction: Direction::new(0.0, PI / 2.0).expect("valid direction"),
            bs_antennas: 16,
            tx_power: dbm_to_watts(28.0),
            noise_power,
            sync_length: 32,
        };
        Self {
            geom,
            area: CoverageArea {
                center: CartesianPoint::new(-10.0, -50.0, 50.0),
                extent_y: 30.0,
                extent_z: 30.0,
                grid_ny: 31,
                grid_nz: 31,
            },
            radio,
            detector: DetectorConfig::new(0.1, noise_power).expect("valid detector"),
            design: DesignSpec::Optimized {
                randomization_count: 3000,
                seed: 7,
                repetitions: 80,
            },
            scatter: ScatterModel {
                path_count: 5,
                power_ratio: 0.0,
                direction_stddev: 0.1,
            },
            master_seed: 1,
            ucf: UnitCellFactorModel::default_for(&geom),
            noise: Some(NoiseComposition {
                density: dbm_to_watts(-174.0),
                bandwidth: 20e6,
                noise_figure: 10f64.powf(0.6),
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geom.validate()?;
        self.area.validate()?;
        self.radio.validate()?;
        self.scatter.validate()?;
        self.ucf.validate()?;
        self.design.validate(&self.geom)?;
        if self.radio.wavelength != self.geom.wavelength {
            return Err(Error::param("radio and IRS wavelengths differ"));
        }
        if self.detector.noise_power() != self.radio.noise_power {
            return Err(Error::param("detector and radio noise powers differ"));
        }
        if let Some(n) = self.noise {
            let gap = (10.0 * (n.power() / self.radio.noise_power).log10()).abs();
            if !(gap <= NOISE_COMPOSITION_TOL_DB) {
                return Err(Error::param(format!(
                    "noise power {} W disagrees with N0*B*F = {} W ({gap:.3} dB)",
                    self.radio.noise_power,
                    n.power()
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes");
        Sha256::digest(&json)
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }

    /// Same scenario with a square area of side `extent`.
    pub fn with_extent(&self, extent: f64) -> Self {
        let mut s = self.clone();
        s.area = s.area.with_extent(extent);
        s
    }

    pub fn design_grid(&self) -> Vec<CartesianPoint> {
        coverage_grid(&self.area)
    }

    pub fn gain_set(&self) -> Result<GainMatrixSet> {
        build_gain_matrices(&self.design_grid(), &self.radio, &self.geom, &self.ucf)
    }

    /// Generates the configured design(s) on the scenario grid.
    pub fn realize_design(&self, spec: &DesignSpec) -> Result<(GainMatrixSet, Vec<PhaseShiftVector>)> {
        let gains = self.gain_set()?;
        let r = realize(spec, &self.area, &gains, &self.radio, &self.geom)?;
        Ok((gains, r.designs))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdMap {
    pub ny: usize,
    pub nz: usize,
    pub points: Vec<CartesianPoint>,
    pub gamma: Vec<f64>,
    pub md: Vec<f64>,
    pub design: String,
}

impl MdMap {
    /// Largest misdetection probability and its index.
    pub fn max(&self) -> (f64, usize) {
        self.md
            .iter()
            .enumerate()
            .fold((f64::NEG_INFINITY, 0), |acc, (i, &v)| if v > acc.0 { (v, i) } else { acc })
    }
}

fn los_channel(scenario: &ScenarioConfig, w: &PhaseShiftVector, p: CartesianPoint) -> Result<Complex64> {
    let (h0, dir) = device_irs_los(p, scenario.radio.wavelength)?;
    end_to_end_channel(
        &ChannelRealization::line_of_sight(h0, dir),
        w,
        &scenario.radio,
        &scenario.geom,
        &scenario.ucf,
    )
}

fn check_design(scenario: &ScenarioConfig, w: &PhaseShiftVector) -> Result<()> {
    if w.len() != scenario.geom.cell_count() {
        return Err(Error::Dimension {
            expected: scenario.geom.cell_count(),
            actual: w.len(),
        });
    }
    Ok(())
}

/// LoS misdetection map of `w` over the grid of `eval`.
pub fn analytic_md_map(
    scenario: &ScenarioConfig,
    w: &PhaseShiftVector,
    eval: &CoverageArea,
    design: &str,
) -> Result<MdMap> {
    check_design(scenario, w)?;
    eval.validate()?;
    let points = coverage_grid(eval);
    let t = scenario.detector.threshold();
    let gamma = points
        .par_iter()
        .map(|&p| Ok(noncentrality(los_channel(scenario, w, p)?, &scenario.radio)))
        .collect::<Result<Vec<f64>>>()?;
    let md = gamma.iter().map(|&g| misdetection_probability(g, t)).collect();
    Ok(MdMap {
        ny: eval.grid_ny,
        nz: eval.grid_nz,
        points,
        gamma,
        md,
        design: design.to_string(),
    })
}

/// Worst-case LoS misdetection over the scenario grid, via the smallest
/// gain (misdetection decreases monotonically in the noncentrality).
pub fn worst_case_md(scenario: &ScenarioConfig, w: &PhaseShiftVector) -> Result<(f64, usize)> {
    worst_case_md_on(scenario, w, &scenario.gain_set()?)
}

pub fn worst_case_md_on(
    scenario: &ScenarioConfig,
    w: &PhaseShiftVector,
    gains: &GainMatrixSet,
) -> Result<(f64, usize)> {
    let (gain, q) = worst_case_gain(w, gains)?;
    let gamma = noncentrality_from_gain(gain, &scenario.radio);
    Ok((misdetection_probability(gamma, scenario.detector.threshold()), q))
}

/// Empirical misdetection statistics at several locations.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub per_location: Vec<DetectionStats>,
    /// Index of the location with the highest empirical misdetection rate.
    pub worst: usize,
}

impl MonteCarloResult {
    pub fn worst_stats(&self) -> DetectionStats {
        self.per_location[self.worst]
    }
}

fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Counts missed detections for trials `range` at one location.
fn count_misses(
    scenario: &ScenarioConfig,
    w: &PhaseShiftVector,
    loc: usize,
    los: (Complex64, Direction),
    los_h: Complex64,
    sync: &[Complex64],
    range: std::ops::Range<usize>,
) -> Result<u64> {
    let sigma2 = scenario.radio.noise_power;
    let amp = (scenario.radio.bs_antennas as f64).sqrt();
    let scattered = scenario.scatter.path_count > 1 && scenario.scatter.power_ratio > 0.0;
    let channel_seed = derive_seed(scenario.master_seed, StreamKind::Channel, loc as u64);
    let noise_seed = derive_seed(scenario.master_seed, StreamKind::Noise, loc as u64);
    let mut y = vec![Complex64::new(0.0, 0.0); sync.len()];
    let mut misses = 0u64;
    for trial in range {
        let h = if scattered {
            let mut rng = substream(channel_seed, StreamKind::Channel, trial as u64);
            let real = sample_scattered_paths(los, &scenario.scatter, &mut rng);
            end_to_end_channel(&real, w, &scenario.radio, &scenario.geom, &scenario.ucf)?
        } else {
            los_h
        };
        let mut rng = substream(noise_seed, StreamKind::Noise, trial as u64);
        let gain = h * amp;
        for (yi, si) in y.iter_mut().zip(sync) {
            *yi = gain * si + complex_normal(&mut rng, sigma2);
        }
        if !decide(&y, sync, &scenario.detector)? {
            misses += 1;
        }
    }
    Ok(misses)
}

fn chunks(trials: usize) -> Vec<std::ops::Range<usize>> {
    (0..trials)
        .step_by(TRIAL_CHUNK)
        .map(|s| s..(s + TRIAL_CHUNK).min(trials))
        .collect()
}

/// Monte-Carlo misdetection rates of `w` at each point, using the scenario's
/// scatter model for the device-IRS link.
pub fn monte_carlo_md(
    scenario: &ScenarioConfig,
    w: &PhaseShiftVector,
    points: &[CartesianPoint],
    trials: usize,
) -> Result<MonteCarloResult> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    if points.is_empty() {
        return Err(Error::param("no evaluation points"));
    }
    check_design(scenario, w)?;
    scenario.scatter.validate()?;
    let sync = synchronization_sequence(scenario.radio.sync_length, scenario.radio.tx_power);

    let los = points
        .iter()
        .map(|&p| {
            let l = device_irs_los(p, scenario.radio.wavelength)?;
            let h = end_to_end_channel(
                &ChannelRealization::line_of_sight(l.0, l.1),
                w,
                &scenario.radio,
                &scenario.geom,
                &scenario.ucf,
            )?;
            Ok((l, h))
        })
        .collect::<Result<Vec<_>>>()?;

    let work: Vec<(usize, std::ops::Range<usize>)> = (0..points.len())
        .flat_map(|loc| chunks(trials).into_iter().map(move |r| (loc, r)))
        .collect();
    let counts = work
        .par_iter()
        .map(|(loc, range)| {
            let (l, h) = los[*loc];
            count_misses(scenario, w, *loc, l, h, &sync, range.clone()).map(|m| (*loc, m))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut misses = vec![0u64; points.len()];
    for (loc, m) in counts {
        misses[loc] += m;
    }

    let per_location: Vec<DetectionStats> = misses
        .iter()
        .zip(&los)
        .map(|(&m, (_, h))| {
            let p = m as f64 / trials as f64;
            DetectionStats {
                false_alarm: scenario.detector.target_false_alarm(),
                misdetection: p,
                noncentrality: noncentrality(*h, &scenario.radio),
                kind: StatsKind::Empirical,
                trials,
                ci_half_width: binomial_ci_half_width(p, trials),
            }
        })
        .collect();
    let worst = per_location
        .iter()
        .enumerate()
        .fold(0, |best, (i, s)| if s.misdetection > per_location[best].misdetection { i } else { best });
    Ok(MonteCarloResult { per_location, worst })
}

/// Empirical alarm rate over noise-only observations.
pub fn monte_carlo_false_alarm(scenario: &ScenarioConfig, trials: usize) -> Result<DetectionStats> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    let sync = synchronization_sequence(scenario.radio.sync_length, scenario.radio.tx_power);
    let sigma2 = scenario.radio.noise_power;
    let seed = derive_seed(scenario.master_seed, StreamKind::Noise, u64::MAX);
    let alarms: u64 = chunks(trials)
        .par_iter()
        .map(|range| {
            let mut y = vec![Complex64::new(0.0, 0.0); sync.len()];
            let mut n = 0u64;
            for trial in range.clone() {
                let mut rng = substream(seed, StreamKind::Noise, trial as u64);
                for yi in y.iter_mut() {
                    *yi = complex_normal(&mut rng, sigma2);
                }
                if decide(&y, &sync, &scenario.detector)? {
                    n += 1;
                }
            }
            Ok(n)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    let p = alarms as f64 / trials as f64;
    Ok(DetectionStats {
        false_alarm: p,
        misdetection: f64::NAN,
        noncentrality: 0.0,
        kind: StatsKind::Empirical,
        trials,
        ci_half_width: binomial_ci_half_width(p, trials),
    })
}

/// How sweep rows are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMode {
    /// LoS worst case over the design grid.
    Analytic,
    /// Monte-Carlo worst case over an `ny x nz` grid of the same area.
    MonteCarlo { trials: usize, ny: usize, nz: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Area side length or power ratio.
    pub value: f64,
    pub design: String,
    pub md: f64,
    pub ci: f64,
}

/// Mean and 95% half-width of the mean.
fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Worst-case misdetection for each (size, design). Optimized designs report
/// the mean over their repetitions in analytic mode; Monte-Carlo mode
/// evaluates the first repetition only.
pub fn sweep_area_sizes(
    template: &ScenarioConfig,
    sizes: &[f64],
    designs: &[DesignSpec],
    mode: EvalMode,
) -> Result<Vec<SweepRow>> {
    if sizes.is_empty() || designs.is_empty() {
        return Err(Error::param("sweep needs at least one size and one design"));
    }
    let mut rows = Vec::new();
    for &size in sizes {
        if !(size >= 0.0 && size.is_finite()) {
            return Err(Error::param(format!("area size must be non-negative, got {size}")));
        }
        let scenario = template.with_extent(size);
        let gains = scenario.gain_set()?;
        for spec in designs {
            let r = realize(spec, &scenario.area, &gains, &scenario.radio, &scenario.geom)?;
            let (md, ci) = match mode {
                EvalMode::Analytic => {
                    let mds = r
                        .designs
                        .iter()
                        .map(|w| worst_case_md_on(&scenario, w, &gains).map(|x| x.0))
                        .collect::<Result<Vec<_>>>()?;
                    mean_ci(&mds)
                }
                EvalMode::MonteCarlo { trials, ny, nz } => {
                    let pts = coverage_grid(&scenario.area.with_grid(ny, nz));
                    let s = monte_carlo_md(&scenario, &r.designs[0], &pts, trials)?.worst_stats();
                    (s.misdetection, s.ci_half_width)
                }
            };
            rows.push(SweepRow {
                value: size,
                design: spec.label(),
                md,
                ci,
            });
        }
    }
    Ok(rows)
}

/// Monte-Carlo worst-case misdetection of a fixed design for each power
/// ratio, keeping the scenario's path count and direction spread.
pub fn scattering_sweep(
    scenario: &ScenarioConfig,
    w: &PhaseShiftVector,
    design: &str,
    rhos: &[f64],
    points: &[CartesianPoint],
    trials: usize,
) -> Result<Vec<SweepRow>> {
    if rhos.is_empty() {
        return Err(Error::param("no power ratios given"));
    }
    rhos.iter()
        .map(|&rho| {
            let mut s = scenario.clone();
            s.scatter.power_ratio = rho;
            if rho > 0.0 && s.scatter.path_count < 2 {
                return Err(Error::param("scattering needs a path count of at least 2"));
            }
            let stats = monte_carlo_md(&s, w, points, trials)?.worst_stats();
            Ok(SweepRow {
                value: rho,
                design: design.to_string(),
                md: stats.misdetection,
                ci: stats.ci_half_width,
            })
        })
        .collect()
}

fn csv_header(out: &mut String, kind: &str, scenario: &ScenarioConfig, extra: &[(&str, String)]) {
    let _ = writeln!(out, "# irsdet {kind}");
    let _ = writeln!(out, "# scenario: {}", scenario.fingerprint());
    let _ = writeln!(out, "# seed: {}", scenario.master_seed);
    for (k, v) in extra {
        let _ = writeln!(out, "# {k}: {v}");
    }
}

pub fn map_csv(map: &MdMap, scenario: &ScenarioConfig) -> String {
    let mut out = String::new();
    csv_header(&mut out, "map", scenario, &[("design", map.design.clone())]);
    out.push_str("y,z,gamma,md\n");
    for ((p, g), md) in map.points.iter().zip(&map.gamma).zip(&map.md) {
        let _ = writeln!(out, "{},{},{},{}", p.y, p.z, g, md);
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow], scenario: &ScenarioConfig, mode: &str) -> String {
    let mut out = String::new();
    csv_header(&mut out, "sweep", scenario, &[("mode", mode.to_string())]);
    out.push_str("size_or_rho,design,md,ci\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.value, r.design, r.md, r.ci);
    }
    out
}

/// Per-location Monte-Carlo rates: `y,z,gamma,md,ci`.
pub fn monte_carlo_csv(points: &[CartesianPoint], result: &MonteCarloResult, scenario: &ScenarioConfig, design: &str) -> String {
    let mut out = String::new();
    let trials = result.per_location.first().map_or(0, |s| s.trials);
    csv_header(
        &mut out,
        "montecarlo",
        scenario,
        &[("design", design.to_string()), ("trials", trials.to_string())],
    );
    out.push_str("y,z,gamma,md,ci\n");
    for (p, s) in points.iter().zip(&result.per_location) {
        let _ = writeln!(out, "{},{},{},{},{}", p.y, p.z, s.noncentrality, s.misdetection, s.ci_half_width);
    }
    out
}

/// Noise-only alarm rate: `trials,false_alarm,ci`.
pub fn false_alarm_csv(stats: &DetectionStats, scenario: &ScenarioConfig) -> String {
    let mut out = String::new();
    csv_header(&mut out, "false_alarm", scenario, &[]);
    out.push_str("trials,false_alarm,ci\n");
    let _ = writeln!(out, "{},{},{}", stats.trials, stats.false_alarm, stats.ci_half_width);
    out
}
