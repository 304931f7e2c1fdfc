//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use irsdet::channel::{device_irs_los, end_to_end_channel, ChannelRealization};
use irsdet::designs::{
    gaussian_randomization, realize, solve_sdr, worst_case_gain, DesignSpec, GainMatrixSet, RealizedDesigns,
    DEFAULT_TOLERANCE,
};
use irsdet::detector::{misdetection_probability, noncentrality, DetectorConfig};
use irsdet::geometry::{coverage_grid, CartesianPoint};
use irsdet::irs::PhaseShiftVector;
use irsdet::simulation::{analytic_md_map, monte_carlo_false_alarm, monte_carlo_md, ScenarioConfig};
use irsdet_oracles::{binomial_se, brute_force_max_min, noncentral_chi2_2_cdf_quadrature};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> (bool, String) {
    (elapsed < budget, format!("{:.1}s of {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64()))
}

/// Table I designs at the full 30 m area, shared by several criteria.
struct Reference {
    scenario: ScenarioConfig,
    gains: GainMatrixSet,
    optimized: RealizedDesigns,
    quadratic: PhaseShiftVector,
    linear1: PhaseShiftVector,
    linear4: PhaseShiftVector,
}

fn single(spec: DesignSpec, s: &ScenarioConfig, gains: &GainMatrixSet) -> PhaseShiftVector {
    realize(&spec, &s.area, gains, &s.radio, &s.geom).unwrap().designs.remove(0)
}

impl Reference {
    fn build(extent: f64) -> Self {
        let scenario = ScenarioConfig::table1().with_extent(extent);
        let gains = scenario.gain_set().unwrap();
        let optimized = realize(&scenario.design, &scenario.area, &gains, &scenario.radio, &scenario.geom).unwrap();
        Self {
            quadratic: single(DesignSpec::Quadratic, &scenario, &gains),
            linear1: single(DesignSpec::Linear { tile_count: 1 }, &scenario, &gains),
            linear4: single(DesignSpec::Linear { tile_count: 4 }, &scenario, &gains),
            scenario,
            gains,
            optimized,
        }
    }

    fn md(&self, w: &PhaseShiftVector) -> f64 {
        irsdet::simulation::worst_case_md_on(&self.scenario, w, &self.gains).unwrap().0
    }

    fn optimized_mean_md(&self) -> f64 {
        let mds: Vec<f64> = self.optimized.designs.iter().map(|w| self.md(w)).collect();
        mds.iter().sum::<f64>() / mds.len() as f64
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let s = ScenarioConfig::table1();
    let trials = 100_000;
    let stats = monte_carlo_false_alarm(&s, trials).unwrap();
    let target = 0.1;
    let tol = 3.0 * binomial_se(target, trials);
    let (fast, time) = within_budget(start.elapsed(), Duration::from_secs(10));
    let ok = (stats.false_alarm - target).abs() <= tol;
    outcome(
        ok && fast,
        format!("alarm rate {:.5} vs 0.1 +- {tol:.4}, {time}", stats.false_alarm),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let n = 50;
    let mut worst = 0.0f64;
    for i in 0..n {
        let gamma = 200.0 * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let t = 50.0 * j as f64 / (n - 1) as f64;
            let oracle = noncentral_chi2_2_cdf_quadrature(t, gamma);
            worst = worst.max((misdetection_probability(gamma, t) - oracle).abs());
        }
    }
    let (fast, time) = within_budget(start.elapsed(), Duration::from_secs(30));
    outcome(worst <= 1e-8 && fast, format!("max abs error {worst:.2e} (limit 1e-8), {time}"))
}

/// Random LoS scenario: random device location in the Table I area, random
/// phases, and a noise power chosen so the noncentrality is moderate.
fn random_los_scenario(rng: &mut ChaCha8Rng) -> (ScenarioConfig, PhaseShiftVector, CartesianPoint) {
    let mut s = ScenarioConfig::table1();
    let c = s.area.center;
    let p = CartesianPoint::new(
        c.x,
        c.y + rng.random_range(-15.0..15.0),
        c.z + rng.random_range(-15.0..15.0),
    );
    let phases: Vec<f64> = (0..s.geom.cell_count())
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    let w = PhaseShiftVector::from_phases(&phases);
    let (h0, dir) = device_irs_los(p, s.radio.wavelength).unwrap();
    let h = end_to_end_channel(&ChannelRealization::line_of_sight(h0, dir), &w, &s.radio, &s.geom, &s.ucf).unwrap();
    let target_gamma = rng.random_range(1.0..15.0);
    let noise = s.radio.noise_power * noncentrality(h, &s.radio) / target_gamma;
    s.radio.noise_power = noise;
    s.detector = DetectorConfig::new(s.detector.target_false_alarm(), noise).unwrap();
    s.noise = None;
    s.master_seed = rng.random();
    (s, w, p)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trials = 100_000;
    let mut worst_z = 0.0f64;
    let mut ok = true;
    for _ in 0..10 {
        let (s, w, p) = random_los_scenario(&mut rng);
        let stats = monte_carlo_md(&s, &w, &[p], trials).unwrap().per_location[0];
        let analytic = misdetection_probability(stats.noncentrality, s.detector.threshold());
        let se = binomial_se(analytic, trials);
        let z = (stats.misdetection - analytic).abs() / se;
        worst_z = worst_z.max(z);
        ok &= z <= 3.0;
    }
    let (fast, time) = within_budget(start.elapsed(), Duration::from_secs(120));
    outcome(ok && fast, format!("10 scenarios, largest deviation {worst_z:.2} SE (limit 3), {time}"))
}

fn random_instance(rng: &mut ChaCha8Rng) -> GainMatrixSet {
    let vectors = (0..2)
        .map(|_| {
            (0..4)
                .map(|_| Complex64::from_polar(rng.random_range(0.2..1.0), rng.random_range(0.0..std::f64::consts::TAU)))
                .collect()
        })
        .collect();
    GainMatrixSet::from_vectors(vectors).unwrap()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_ratio = f64::INFINITY;
    let mut bound_ok = true;
    for i in 0..20 {
        let gains = random_instance(&mut rng);
        let (brute, _) = brute_force_max_min(gains.vectors(), 64);
        let sol = solve_sdr(&gains, DEFAULT_TOLERANCE).unwrap();
        bound_ok &= sol.tau >= brute * (1.0 - DEFAULT_TOLERANCE);
        let design = gaussian_randomization(&sol, &gains, 3000, i).unwrap();
        worst_ratio = worst_ratio.min(design.min_gain / brute);
    }
    let (fast, time) = within_budget(start.elapsed(), Duration::from_secs(300));
    outcome(
        worst_ratio >= 0.9 && bound_ok && fast,
        format!(
            "worst randomized/brute ratio {worst_ratio:.4} (limit 0.9), tau bounds brute force: {bound_ok}, {time}"
        ),
    )
}

fn criterion_5(r: &Reference) -> Outcome {
    let tau = r.optimized.sdr.as_ref().unwrap().tau;
    let limit = tau * (1.0 + DEFAULT_TOLERANCE);
    let gain = |w: &PhaseShiftVector| worst_case_gain(w, &r.gains).unwrap().0;
    let opt_max = r.optimized.designs.iter().map(gain).fold(0.0, f64::max);
    let others = [gain(&r.quadratic), gain(&r.linear1), gain(&r.linear4)];
    let ok = opt_max <= limit && others.iter().all(|&g| g <= limit);
    outcome(
        ok,
        format!(
            "tau {tau:.4e}; optimized (best of 80) {opt_max:.4e}, quadratic {:.4e}, linear1 {:.4e}, linear4 {:.4e}",
            others[0], others[1], others[2]
        ),
    )
}

fn criterion_6(r: &Reference, start: Instant) -> Outcome {
    let opt = r.optimized_mean_md();
    let (q, l4, l1) = (r.md(&r.quadratic), r.md(&r.linear4), r.md(&r.linear1));
    let ordered = opt < q && q < l4 && l4 < l1;

    let small = Reference::build(5.0);
    let mds = [small.optimized_mean_md(), small.md(&small.quadratic), small.md(&small.linear4), small.md(&small.linear1)];
    let spread = mds.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - mds.iter().cloned().fold(f64::INFINITY, f64::min);
    let (fast, time) = within_budget(start.elapsed(), Duration::from_secs(1800));
    outcome(
        ordered && spread <= 0.02 && fast,
        format!(
            "30 m: optimized {opt:.4} < quadratic {q:.4} < linear4 {l4:.4} < linear1 {l1:.4}: {ordered}; \
             5 m spread {spread:.2e} (limit 0.02), {time}"
        ),
    )
}

fn criterion_7(r: &Reference) -> Outcome {
    let s = &r.scenario;
    let lin = analytic_md_map(s, &r.linear1, &s.area, "linear1").unwrap();
    let c = s.area.center;
    let at = |y: f64, z: f64| {
        lin.points
            .iter()
            .position(|p| (p.y - y).abs() < 1e-9 && (p.z - z).abs() < 1e-9)
            .map(|i| lin.md[i])
            .unwrap()
    };
    let corner = at(c.y + s.area.extent_y / 2.0, c.z + s.area.extent_z / 2.0);
    let center = at(c.y, c.z);
    let opt = analytic_md_map(s, &r.optimized.designs[0], &s.area, "optimized").unwrap();
    let (opt_max, lin_max) = (opt.max().0, lin.max().0);
    outcome(
        corner > center && opt_max < lin_max,
        format!(
            "linear1 corner {corner:.4} > center {center:.2e}; optimized max {opt_max:.4} < linear1 max {lin_max:.4}"
        ),
    )
}

fn criterion_8(r: &Reference) -> Outcome {
    let trials = 10_000;
    let w = &r.optimized.designs[0];
    let points = coverage_grid(&r.scenario.area.with_grid(11, 11));
    let run = |rho: f64| {
        let mut s = r.scenario.clone();
        s.scatter.power_ratio = rho;
        monte_carlo_md(&s, w, &points, trials).unwrap().worst_stats()
    };
    let base = run(0.0);
    let half = run(0.5);
    let one = run(1.0);
    let ok = half.misdetection >= base.misdetection
        && one.misdetection >= base.misdetection
        && one.misdetection - one.ci_half_width > base.misdetection + base.ci_half_width;
    outcome(
        ok,
        format!(
            "rho 0: {:.4}+-{:.4}, rho 0.5: {:.4}+-{:.4}, rho 1: {:.4}+-{:.4}",
            base.misdetection, base.ci_half_width, half.misdetection, half.ci_half_width, one.misdetection,
            one.ci_half_width
        ),
    )
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_irsdet")).args(args).output().unwrap();
    assert!(out.status.success(), "irsdet {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/table1.scenario");
    let scenario = scenario.to_str().unwrap();
    let design = |name: &str, flags: &[&str]| -> (PathBuf, bool) {
        let a = dir.path().join(format!("{name}_a.txt"));
        let b = dir.path().join(format!("{name}_b.txt"));
        for p in [&a, &b] {
            let mut args = vec!["design", "--scenario", scenario, "--out", p.to_str().unwrap()];
            args.extend_from_slice(flags);
            run_cli(&args);
        }
        let same = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();
        (a, same)
    };
    let (opt, opt_same) = design("opt", &["--variant", "optimized", "--G", "3000", "--seed", "7"]);
    let (lin, lin_same) = design("lin", &["--variant", "linear", "--tiles", "4"]);
    let opt = opt.to_str().unwrap();
    let lin = lin.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["map", "--scenario", scenario, "--design", opt],
        vec!["sweep", "--scenario", scenario, "--sizes", "10,30", "--designs", "linear1,linear4,quadratic"],
        vec!["sweep", "--scenario", scenario, "--rhos", "0,1", "--design", lin, "--trials", "500", "--grid", "3", "3"],
        vec!["montecarlo", "--scenario", scenario, "--design", lin, "--trials", "2000", "--grid", "3", "3", "--rho", "1"],
        vec!["montecarlo", "--scenario", scenario, "--false-alarm", "--trials", "5000"],
    ];
    let mut failed = Vec::new();
    if !opt_same {
        failed.push("design optimized".to_string());
    }
    if !lin_same {
        failed.push("design linear".to_string());
    }
    for c in &commands {
        if run_cli(c) != run_cli(c) {
            failed.push(c[0].to_string());
        }
    }
    outcome(
        failed.is_empty(),
        format!("{} commands rerun; differing: {failed:?}", commands.len() + 2),
    )
}

fn main() {
    let mut results = Vec::new();
    let mut record = |n: usize, o: Outcome| {
        println!("criterion {n}: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push(o.pass);
    };
    record(1, criterion_1());
    record(2, criterion_2());
    record(3, criterion_3());
    record(4, criterion_4());
    let start = Instant::now();
    let reference = Reference::build(30.0);
    record(5, criterion_5(&reference));
    record(6, criterion_6(&reference, start));
    record(7, criterion_7(&reference));
    record(8, criterion_8(&reference));
    record(9, criterion_9());
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
