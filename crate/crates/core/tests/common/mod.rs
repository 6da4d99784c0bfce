#![allow(dead_code)]

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use geoipm::geometry::{divergence, GeodesicRay};
use geoipm::jordan::{BlockKind, Cone, Element};
use geoipm::linalg::Matrix;
use geoipm::random::{random_element, random_interior, SeededRng};
use geoipm::subspace::ConicProblem;

pub fn rel_close(a: &Element, b: &Element, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

pub fn rel_err(a: &Element, b: &Element) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

/// Orthant(8), second-order(6), PSD(6) and one mixed cone.
pub fn families() -> Vec<(&'static str, Arc<Cone>)> {
    vec![
        ("orthant", Cone::orthant(8).unwrap()),
        ("soc", Cone::second_order(6).unwrap()),
        ("psd", Cone::psd(6).unwrap()),
        ("mixed", Cone::new(vec![BlockKind::Orthant(3), BlockKind::SecondOrder(4), BlockKind::Psd(3)]).unwrap()),
    ]
}

pub fn random_problem(cone: &Arc<Cone>, dim_l: usize, rng: &mut SeededRng) -> ConicProblem {
    let x0 = random_interior(cone, rng, 0.5);
    let s0 = random_interior(cone, rng, 0.5);
    let basis = (0..dim_l).map(|_| random_element(cone, rng)).collect();
    ConicProblem::basis(cone, x0, s0, basis).unwrap()
}

/// Operator-form instance with strictly feasible `x̄` and `s̄ = c − A ȳ`,
/// `B ȳ = g`.
pub fn random_operator_problem(cone: &Arc<Cone>, m: usize, p: usize, rng: &mut SeededRng) -> ConicProblem {
    let a: Vec<Element> = (0..m).map(|_| random_element(cone, rng)).collect();
    let b_mat = Matrix::from_fn(p, m, |_, _| rng.gaussian());
    let x_bar = random_interior(cone, rng, 0.5);
    let s_bar = random_interior(cone, rng, 0.5);
    let y_bar = rng.gaussian_vec(m);
    let b: Vec<f64> = a.iter().map(|ai| ai.inner(&x_bar)).collect();
    let g = b_mat.matvec(&y_bar);
    let mut c = s_bar;
    for (ai, yi) in a.iter().zip(&y_bar) {
        c = c.axpy(*yi, ai);
    }
    ConicProblem::operator(cone, a, b_mat, b, c, g).unwrap()
}

pub fn unit_direction(cone: &Arc<Cone>, rng: &mut SeededRng) -> Element {
    let u = random_element(cone, rng);
    &u * (1.0 / u.norm())
}

/// Point at geodesic distance exactly `dist` from `center`.
pub fn at_distance(center: &Element, dist: f64, rng: &mut SeededRng) -> Element {
    let u = unit_direction(center.cone(), rng);
    GeodesicRay::new(center.clone(), &u * dist).unwrap().point(1.0).unwrap()
}

/// Point on a random geodesic from `center` whose divergence to `center`
/// equals `target` (bisection on the monotone profile).
pub fn at_divergence(center: &Element, target: f64, rng: &mut SeededRng) -> Element {
    let u = unit_direction(center.cone(), rng);
    let ray = GeodesicRay::new(center.clone(), u).unwrap();
    let h = |t: f64| divergence(&ray.point(t).unwrap(), center).unwrap();
    let mut hi = 1.0;
    while h(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ray.point(0.5 * (lo + hi)).unwrap()
}

/// Runs `check`, writes one `PASS`/`FAIL` line straight to stderr (so it
/// shows without `--nocapture`) and fails the test on `FAIL`.
pub fn report(id: usize, name: &str, budget: Option<Duration>, check: impl FnOnce() -> Result<String, String>) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let outcome = match (outcome, budget) {
        (Ok(d), Some(b)) if elapsed > b => Err(format!("{d}; runtime {elapsed:.2?} exceeds {b:?}")),
        (o, _) => o,
    };
    let line = match &outcome {
        Ok(detail) => format!("criterion {id:>2} PASS  {name} ({elapsed:.2?}): {detail}\n"),
        Err(detail) => format!("criterion {id:>2} FAIL  {name} ({elapsed:.2?}): {detail}\n"),
    };
    let _ = std::io::stderr().write_all(line.as_bytes());
    if let Err(detail) = outcome {
        panic!("criterion {id} ({name}) failed: {detail}");
    }
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
