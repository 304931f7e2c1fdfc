use irsdet::designs::{
    gaussian_randomization, linear_tiled_design, quadratic_design, realize, solve_sdr, worst_case_gain, DesignSpec,
    GainMatrixSet, DEFAULT_TOLERANCE,
};
use irsdet::geometry::coverage_grid;
use irsdet::simulation::ScenarioConfig;
use irsdet_oracles::brute_force_max_min;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_gains(rng: &mut ChaCha8Rng, cells: usize, locations: usize) -> GainMatrixSet {
    let vectors = (0..locations)
        .map(|_| {
            (0..cells)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    GainMatrixSet::from_vectors(vectors).unwrap()
}

#[test]
fn randomized_designs_near_brute_force_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..15 {
        let gains = random_gains(&mut rng, 3, 3);
        let (brute, _) = brute_force_max_min(gains.vectors(), 64);
        let sol = solve_sdr(&gains, DEFAULT_TOLERANCE).unwrap();
        assert!(sol.tau >= brute * (1.0 - DEFAULT_TOLERANCE), "instance {i}");
        let d = gaussian_randomization(&sol, &gains, 10_000, i).unwrap();
        assert!(d.min_gain >= 0.9 * brute, "instance {i}: {} vs {brute}", d.min_gain);
        assert!(d.min_gain <= sol.tau * (1.0 + DEFAULT_TOLERANCE));
    }
}

#[test]
fn every_design_is_bounded_by_the_relaxation() {
    let mut s = ScenarioConfig::table1().with_extent(20.0);
    s.area = s.area.with_grid(7, 7);
    let gains = s.gain_set().unwrap();
    let spec = DesignSpec::Optimized {
        randomization_count: 500,
        seed: 3,
        repetitions: 4,
    };
    let r = realize(&spec, &s.area, &gains, &s.radio, &s.geom).unwrap();
    let tau = r.sdr.as_ref().unwrap().tau;
    let mut designs = r.designs.clone();
    designs.push(quadratic_design(&coverage_grid(&s.area), &s.radio, &s.geom).unwrap());
    for k in [1, 2, 4, 8] {
        designs.push(linear_tiled_design(k, &s.area, &s.radio, &s.geom).unwrap());
    }
    for w in &designs {
        let (g, _) = worst_case_gain(w, &gains).unwrap();
        assert!(g <= tau * (1.0 + DEFAULT_TOLERANCE), "{g} > {tau}");
    }
    // Optimized repetitions are distinct draws but each beats the single-tile beam.
    let lin1 = worst_case_gain(&designs[designs.len() - 4], &gains).unwrap().0;
    for w in &r.designs {
        assert!(worst_case_gain(w, &gains).unwrap().0 > lin1);
    }
}
