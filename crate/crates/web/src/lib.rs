//! Browser bindings: each exported function builds a random SDP from a seed,
//! runs one computation and returns its result as a JSON string.

use geoipm::geometry::{divergence, geodesic_distance, GeodesicRay};
use geoipm::harness::generate_random_sdp;
use geoipm::random::{random_element, SeededRng};
use geoipm::solver::{center_with_observer, longstep, oracle_center, shortstep, LongStepParams, ShortStepParams};
use geoipm::subspace::{newton_direction, ConicProblem};
use geoipm::{Element, Error, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest matrix side accepted from the page.
pub const MAX_SIDE: usize = 24;

fn instance(n: usize, dim_l: usize, seed: u64) -> Result<ConicProblem> {
    if n > MAX_SIDE {
        return Err(Error::InvalidParameter(format!("matrix side is limited to {MAX_SIDE} in the demo")));
    }
    let cap = (n * (n + 1) / 2).saturating_sub(1).max(1);
    generate_random_sdp(n, dim_l.clamp(1, cap), seed)
}

/// Point at geodesic distance `dist` from `center` along a seeded random
/// unit direction.
fn perturbed(center: &Element, dist: f64, seed: u64) -> Result<Element> {
    let mut rng = SeededRng::new(seed ^ 0x5DEE_CE66_D1CE_4E5B);
    let u = random_element(center.cone(), &mut rng);
    let u = &u * (dist / u.norm());
    GeodesicRay::new(center.clone(), u)?.point(1.0)
}

#[derive(Debug, Serialize)]
pub struct Profile {
    pub t: Vec<f64>,
    /// Divergence to the central point along the Newton geodesic.
    pub h: Vec<f64>,
    pub t_max: f64,
    pub h_lb: f64,
    pub h_ub: f64,
    pub norm_d: f64,
    pub delta: f64,
}

/// Divergence `h(w(t), ŵ(μ))` along the Newton geodesic from a point at
/// geodesic distance `dist` from the central point, on `t ∈ [0, t_end]`
/// with `t_end = 2·min(t_max, 1)` unless `t_max` is infinite.
pub fn divergence_profile(n: usize, dim_l: usize, seed: u64, mu: f64, dist: f64, samples: usize) -> Result<Profile> {
    let p = instance(n, dim_l, seed)?;
    let w_hat = oracle_center(&p, mu, None)?;
    let w = perturbed(&w_hat, dist, seed)?;
    let nd = newton_direction(&p, &w, mu)?;
    let ray = GeodesicRay::new(w.clone(), nd.d.clone())?;
    let t_end = if nd.t_max.is_finite() { 2.0 * nd.t_max.min(1.0) } else { 2.0 };
    let samples = samples.clamp(2, 2000);
    let mut t = Vec::with_capacity(samples);
    let mut h = Vec::with_capacity(samples);
    for i in 0..samples {
        let ti = t_end * i as f64 / (samples - 1) as f64;
        t.push(ti);
        h.push(divergence(&ray.point(ti)?, &w_hat)?);
    }
    Ok(Profile {
        t,
        h,
        t_max: nd.t_max,
        h_lb: nd.h_lb,
        h_ub: nd.h_ub,
        norm_d: nd.norm_d,
        delta: geodesic_distance(&w, &w_hat)?,
    })
}

#[derive(Debug, Serialize)]
pub struct CenteringRun {
    pub delta: Vec<f64>,
    pub h: Vec<f64>,
    pub h_ub: Vec<f64>,
    pub status: String,
}

/// Centering from a point at distance `dist` from `ŵ(μ)`, logging the
/// distance, the divergence and `h_ub` at every iterate.
pub fn centering_run(
    n: usize,
    dim_l: usize,
    seed: u64,
    mu: f64,
    dist: f64,
    gamma: f64,
    eps: f64,
) -> Result<CenteringRun> {
    let p = instance(n, dim_l, seed)?;
    let w_hat = oracle_center(&p, mu, None)?;
    let w0 = perturbed(&w_hat, dist, seed)?;
    let mut out = CenteringRun { delta: Vec::new(), h: Vec::new(), h_ub: Vec::new(), status: String::new() };
    let mut err = None;
    let run = center_with_observer(&p, &w0, mu, eps, gamma, 2_000, |w, nd| {
        match (geodesic_distance(w, &w_hat), divergence(w, &w_hat)) {
            (Ok(d), Ok(h)) => {
                out.delta.push(d);
                out.h.push(h);
                out.h_ub.push(nd.h_ub);
            }
            (Err(e), _) | (_, Err(e)) => err = Some(e),
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    out.status = run.trace.status.to_string();
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct MuTrace {
    /// `(cumulative Newton steps, μ)` after each long-step μ-update.
    pub long: Vec<(usize, f64)>,
    pub long_steps: usize,
    pub short: Vec<(usize, f64)>,
    pub short_steps: usize,
    pub status: String,
}

/// Long-step and short-step μ traces from `ŵ(μ0)` down to `μ0 / ratio`.
pub fn mu_traces(n: usize, dim_l: usize, seed: u64, beta: f64, alpha: f64, ratio: f64) -> Result<MuTrace> {
    let p = instance(n, dim_l, seed)?;
    let w0 = oracle_center(&p, 1.0, None)?;
    let mu_f = 1.0 / ratio;
    let params = LongStepParams { beta, alpha, max_outer: 200, max_newton: 2_000, ..LongStepParams::default() };
    let long = longstep(&p, &w0, 1.0, mu_f, &params)?;
    let sp = ShortStepParams::new(0.5, 1e-4, p.cone().rank())?;
    let short = shortstep(&p, &w0, 1.0, mu_f, &sp)?;
    Ok(MuTrace {
        long_steps: long.trace.newton_steps(),
        long: long.trace.mu_history,
        short_steps: short.trace.newton_steps(),
        short: short.trace.mu_history,
        status: long.trace.status.to_string(),
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(Error::from)).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = divergenceProfile)]
pub fn divergence_profile_js(
    n: usize,
    dim_l: usize,
    seed: u32,
    mu: f64,
    dist: f64,
    samples: usize,
) -> std::result::Result<String, JsValue> {
    to_js(divergence_profile(n, dim_l, seed as u64, mu, dist, samples))
}

#[wasm_bindgen(js_name = centeringRun)]
pub fn centering_run_js(
    n: usize,
    dim_l: usize,
    seed: u32,
    mu: f64,
    dist: f64,
    gamma: f64,
    eps: f64,
) -> std::result::Result<String, JsValue> {
    to_js(centering_run(n, dim_l, seed as u64, mu, dist, gamma, eps))
}

#[wasm_bindgen(js_name = muTraces)]
pub fn mu_traces_js(
    n: usize,
    dim_l: usize,
    seed: u32,
    beta: f64,
    alpha: f64,
    ratio: f64,
) -> std::result::Result<String, JsValue> {
    to_js(mu_traces(n, dim_l, seed as u64, beta, alpha, ratio))
}
