mod common;

use common::*;
use geoipm::geometry::{divergence, q_fn, GeodesicRay};
use geoipm::harness::generate_random_sdp;
use geoipm::random::SeededRng;
use geoipm::solver::{center_with_observer, oracle_center, DEFAULT_CENTER_CAP};
use geoipm::subspace::newton_direction;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mu_update_distance(seed in 0u64..1000, fam in 0usize..4) {
        let mut rng = SeededRng::new(seed);
        let (_, cone) = families().swap_remove(fam);
        let p = random_problem(&cone, cone.dim() / 3, &mut rng);
        let n = cone.rank() as f64;
        let w = oracle_center(&p, 1.0, None).unwrap();
        for k in [2.0f64, 10.0, 100.0] {
            let wk = oracle_center(&p, 1.0 / k, Some(&w)).unwrap();
            let d = geoipm::geometry::geodesic_distance(&w, &wk).unwrap();
            prop_assert!(d * d / n <= q_fn(0.5 * k.ln()) + 1e-8, "k = {k}: δ²/n = {}", d * d / n);
        }
    }

    #[test]
    fn descent_window(seed in 0u64..1000, fam in 0usize..4, dist in 0.05f64..3.0) {
        let mut rng = SeededRng::new(seed);
        let (_, cone) = families().swap_remove(fam);
        let p = random_problem(&cone, cone.dim() / 3, &mut rng);
        let mu = 0.5 + rng.uniform();
        let w_hat = oracle_center(&p, mu, None).unwrap();
        let w = at_distance(&w_hat, dist, &mut rng);
        let nd = newton_direction(&p, &w, mu).unwrap();
        let h0 = divergence(&w, &w_hat).unwrap();
        let ray = GeodesicRay::new(w, nd.d.clone()).unwrap();
        for frac in [0.25, 0.5, 0.75, 1.0] {
            let h = divergence(&ray.point(frac * nd.t_max).unwrap(), &w_hat).unwrap();
            prop_assert!(h <= h0 + 1e-9 * h0.max(1.0), "t = {frac}·t_max: {h} > {h0}");
        }
    }

    #[test]
    fn small_divergence_bounds_direction(seed in 0u64..1000, fam in 0usize..4, target in 0.01f64..0.5) {
        let mut rng = SeededRng::new(seed);
        let (_, cone) = families().swap_remove(fam);
        let p = random_problem(&cone, cone.dim() / 3, &mut rng);
        let w_hat = oracle_center(&p, 1.0, None).unwrap();
        let w = at_divergence(&w_hat, target, &mut rng);
        let nd = newton_direction(&p, &w, 1.0).unwrap();
        prop_assert!(nd.norm_d <= 1.0, "‖d‖ = {} at h = {target}", nd.norm_d);
    }
}

#[test]
fn centering_decreases_divergence_to_the_central_point() {
    let p = generate_random_sdp(8, 6, 21).unwrap();
    let w_hat = oracle_center(&p, 1.0, None).unwrap();
    let mut rng = SeededRng::new(21);
    for dist in [0.5, 2.0, 6.0] {
        let w0 = at_distance(&w_hat, dist, &mut rng);
        let mut hs = Vec::new();
        let run = center_with_observer(&p, &w0, 1.0, 1e-10, 0.5, DEFAULT_CENTER_CAP, |w, _| {
            hs.push(divergence(w, &w_hat).unwrap())
        })
        .unwrap();
        assert!(run.trace.converged());
        for w in hs.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0].max(1.0), "δ = {dist}: h rose {} → {}", w[0], w[1]);
        }
    }
}
