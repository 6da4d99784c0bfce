//! Step-count comparison and centering-profile experiments with CSV output.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, GeodesicRay};
use crate::harness::generator::generate_random_sdp;
use crate::jordan::Element;
use crate::random::{random_element, SeededRng};
use crate::solver::{
    center_with_observer, longstep, oracle_center, shortstep, LongStepParams, ShortStepParams, Status,
    DEFAULT_CENTER_CAP,
};

pub const FIG3_STEPS_HEADER: &str = "n,algo,trial,steps";
pub const FIG3_MU_TRACE_HEADER: &str = "step,mu";
pub const FIG3_ERRORS_HEADER: &str = "n,algo,trial,error";
pub const FIG3_SUMMARY_HEADER: &str = "n,algo,mean,std";
pub const FIG4_HEADER: &str = "init_id,iter,delta,h_ub";

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "GEOIPM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShortOverrides {
    pub beta: f64,
    pub eps: f64,
}

impl Default for ShortOverrides {
    fn default() -> Self {
        ShortOverrides { beta: 0.5, eps: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CenteringConfig {
    /// Matrix side of the fixed instance.
    pub n: usize,
    pub mu: f64,
    /// Geodesic distances of the initial points from `ŵ(μ)`.
    pub init_distances: Vec<f64>,
    pub eps: f64,
    pub gamma: f64,
}

impl Default for CenteringConfig {
    fn default() -> Self {
        CenteringConfig { n: 20, mu: 1.0, init_distances: vec![0.5, 1.0, 2.0, 4.0, 8.0], eps: 1e-10, gamma: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub dim_l: usize,
    /// `μ0 / μ_f`.
    pub mu_ratio: f64,
    pub mu0: f64,
    pub short: ShortOverrides,
    pub long: LongStepParams,
    pub centering: CenteringConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            n_values: vec![10, 20, 30],
            trials: 20,
            dim_l: 10,
            mu_ratio: 1024.0,
            mu0: 1.0,
            short: ShortOverrides::default(),
            long: LongStepParams::default(),
            centering: CenteringConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 2) {
            return bad("n_values must be non-empty with every n ≥ 2");
        }
        if self.trials == 0 || self.dim_l == 0 {
            return bad("trials and dim_l must be positive");
        }
        if !(self.mu_ratio > 1.0 && self.mu0 > 0.0) {
            return bad("mu_ratio must exceed 1 and mu0 must be positive");
        }
        self.long.validate()?;
        let c = &self.centering;
        if c.n < 2 || !(c.mu > 0.0) || !(c.eps > 0.0) || c.init_distances.iter().any(|d| !(*d >= 0.0)) {
            return bad("centering settings need n ≥ 2, μ > 0, ε > 0 and nonnegative distances");
        }
        Ok(())
    }

    pub fn mu_f(&self) -> f64 {
        self.mu0 / self.mu_ratio
    }
}

/// Per-trial seed derived from the experiment seed (SplitMix64 finalizer).
pub fn trial_seed(seed: u64, n: usize, trial: usize) -> u64 {
    let mut z = seed ^ ((n as u64) << 32) ^ (trial as u64);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Short,
    Long,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Short => "short",
            Algo::Long => "long",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepCount {
    pub n: usize,
    pub algo: Algo,
    pub trial: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialError {
    pub n: usize,
    pub algo: Algo,
    pub trial: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSummary {
    pub n: usize,
    pub algo: Algo,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepCountResults {
    pub steps: Vec<StepCount>,
    pub errors: Vec<TrialError>,
    /// `(cumulative Newton steps, μ)` of one longstep run.
    pub mu_trace: Vec<(usize, f64)>,
}

impl StepCountResults {
    pub fn summary(&self) -> Vec<StepSummary> {
        let mut out = Vec::new();
        let mut keys: Vec<(usize, Algo)> = Vec::new();
        for s in &self.steps {
            if !keys.contains(&(s.n, s.algo)) {
                keys.push((s.n, s.algo));
            }
        }
        for (n, algo) in keys {
            let xs: Vec<f64> =
                self.steps.iter().filter(|s| s.n == n && s.algo == algo).map(|s| s.steps as f64).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
            out.push(StepSummary { n, algo, mean, std: var.sqrt() });
        }
        out
    }
}

struct TrialOutcome {
    n_index: usize,
    trial: usize,
    n: usize,
    short: std::result::Result<usize, String>,
    long: std::result::Result<(usize, Vec<(usize, f64)>), String>,
}

fn status_result(status: &Status) -> std::result::Result<(), String> {
    match status {
        Status::Converged => Ok(()),
        other => Err(other.to_string()),
    }
}

fn run_trial(cfg: &ExperimentConfig, n_index: usize, n: usize, trial: usize) -> TrialOutcome {
    let fail = |e: String| TrialOutcome { n_index, trial, n, short: Err(e.clone()), long: Err(e) };
    let problem = match generate_random_sdp(n, cfg.dim_l, trial_seed(cfg.seed, n, trial)) {
        Ok(p) => p,
        Err(e) => return fail(format!("generation: {e}")),
    };
    let w0 = match oracle_center(&problem, cfg.mu0, None) {
        Ok(w) => w,
        Err(e) => return fail(format!("initial centering: {e}")),
    };
    let mu_f = cfg.mu_f();
    let short = ShortStepParams::new(cfg.short.beta, cfg.short.eps, problem.cone().rank())
        .and_then(|p| shortstep(&problem, &w0, cfg.mu0, mu_f, &p))
        .map_err(|e| e.to_string())
        .and_then(|run| status_result(&run.trace.status).map(|_| run.trace.newton_steps()));
    let long = longstep(&problem, &w0, cfg.mu0, mu_f, &cfg.long)
        .map_err(|e| e.to_string())
        .and_then(|run| status_result(&run.trace.status).map(|_| (run.trace.newton_steps(), run.trace.mu_history)));
    TrialOutcome { n_index, trial, n, short, long }
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

#[cfg(feature = "parallel")]
fn map_jobs<T: Send>(jobs: Vec<(usize, usize, usize)>, f: impl Fn(usize, usize, usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    let run = || jobs.into_par_iter().map(|(i, n, t)| f(i, n, t)).collect::<Vec<_>>();
    match thread_cap().and_then(|k| rayon::ThreadPoolBuilder::new().num_threads(k).build().ok()) {
        Some(pool) => pool.install(run),
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_jobs<T>(jobs: Vec<(usize, usize, usize)>, f: impl Fn(usize, usize, usize) -> T) -> Vec<T> {
    jobs.into_iter().map(|(i, n, t)| f(i, n, t)).collect()
}

/// Newton-step totals of shortstep and longstep from `ŵ(μ0)` to
/// `ŵ(μ0/ratio)` over random SDPs. Trial failures are collected, not fatal.
pub fn run_step_counts(cfg: &ExperimentConfig) -> Result<StepCountResults> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize, usize)> =
        cfg.n_values.iter().enumerate().flat_map(|(i, &n)| (0..cfg.trials).map(move |t| (i, n, t))).collect();
    let mut outcomes = map_jobs(jobs, |i, n, t| run_trial(cfg, i, n, t));
    outcomes.sort_by_key(|o| (o.n_index, o.trial));

    let mut res = StepCountResults::default();
    for o in &outcomes {
        for (algo, r) in [(Algo::Short, o.short.clone()), (Algo::Long, o.long.clone().map(|(s, _)| s))] {
            match r {
                Ok(steps) => res.steps.push(StepCount { n: o.n, algo, trial: o.trial, steps }),
                Err(error) => res.errors.push(TrialError { n: o.n, algo, trial: o.trial, error }),
            }
        }
    }
    // representative trace: first successful longstep run at the largest n
    res.mu_trace = outcomes
        .iter()
        .filter(|o| o.n_index == cfg.n_values.len() - 1)
        .find_map(|o| o.long.as_ref().ok())
        .map(|(_, trace)| trace.clone())
        .unwrap_or_default();
    Ok(res)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenteringRow {
    pub init_id: usize,
    pub iter: usize,
    pub delta: f64,
    pub h_ub: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CenteringResults {
    pub rows: Vec<CenteringRow>,
    pub errors: Vec<(usize, String)>,
}

/// Centering runs on one instance from points at prescribed geodesic
/// distances from `ŵ(μ)`, logging the distance to `ŵ(μ)` and `h_ub` at
/// every iterate.
///
/// Initial point `i` is `Q(ŵ^½) exp(δ_i u_i)` with `u_i` a random unit
/// direction, so that `δ(w0, ŵ) = δ_i` exactly.
pub fn run_centering_profiles(cfg: &ExperimentConfig) -> Result<CenteringResults> {
    cfg.validate()?;
    let c = &cfg.centering;
    let problem = generate_random_sdp(c.n, cfg.dim_l, cfg.seed)?;
    let oracle = oracle_center(&problem, c.mu, None)?;
    let mut rng = SeededRng::new(cfg.seed ^ 0xC3A5_C85C_97CB_3127);
    let mut res = CenteringResults::default();
    for (init_id, &dist) in c.init_distances.iter().enumerate() {
        let u = random_element(problem.cone(), &mut rng);
        let u = &u * (1.0 / u.norm());
        let w0 = GeodesicRay::new(oracle.clone(), &u * dist)?.point(1.0)?;
        let mut rows = Vec::new();
        let mut failure: Option<String> = None;
        let mut observe = |w: &Element, nd: &crate::subspace::NewtonData| match geodesic_distance(w, &oracle) {
            Ok(delta) => rows.push(CenteringRow { init_id, iter: rows.len(), delta, h_ub: nd.h_ub }),
            Err(e) => failure = Some(e.to_string()),
        };
        let run = center_with_observer(&problem, &w0, c.mu, c.eps, c.gamma, DEFAULT_CENTER_CAP, &mut observe)?;
        res.rows.extend(rows);
        if let Some(e) = failure {
            res.errors.push((init_id, e));
        } else if let Err(e) = status_result(&run.trace.status) {
            res.errors.push((init_id, e));
        }
    }
    Ok(res)
}

fn float(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:e}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn step_counts_csv(res: &StepCountResults) -> String {
    let mut out = format!("{FIG3_STEPS_HEADER}\n");
    for s in &res.steps {
        let _ = writeln!(out, "{},{},{},{}", s.n, s.algo.name(), s.trial, s.steps);
    }
    out
}

pub fn mu_trace_csv(res: &StepCountResults) -> String {
    let mut out = format!("{FIG3_MU_TRACE_HEADER}\n");
    for (step, mu) in &res.mu_trace {
        let _ = writeln!(out, "{step},{}", float(*mu));
    }
    out
}

pub fn step_errors_csv(res: &StepCountResults) -> String {
    let mut out = format!("{FIG3_ERRORS_HEADER}\n");
    for e in &res.errors {
        let _ = writeln!(out, "{},{},{},{}", e.n, e.algo.name(), e.trial, csv_field(&e.error));
    }
    out
}

pub fn step_summary_csv(res: &StepCountResults) -> String {
    let mut out = format!("{FIG3_SUMMARY_HEADER}\n");
    for s in res.summary() {
        let _ = writeln!(out, "{},{},{},{}", s.n, s.algo.name(), float(s.mean), float(s.std));
    }
    out
}

pub fn centering_csv(res: &CenteringResults) -> String {
    let mut out = format!("{FIG4_HEADER}\n");
    for r in &res.rows {
        let _ = writeln!(out, "{},{},{},{}", r.init_id, r.iter, float(r.delta), float(r.h_ub));
    }
    out
}

/// Writes `fig3_steps.csv`, `fig3_mu_trace.csv`, `fig3_errors.csv` and
/// `fig3_summary.csv` into `dir`.
pub fn write_step_counts(dir: impl AsRef<Path>, res: &StepCountResults) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("fig3_steps.csv"), step_counts_csv(res))?;
    std::fs::write(dir.join("fig3_mu_trace.csv"), mu_trace_csv(res))?;
    std::fs::write(dir.join("fig3_errors.csv"), step_errors_csv(res))?;
    std::fs::write(dir.join("fig3_summary.csv"), step_summary_csv(res))?;
    Ok(())
}

/// Writes `fig4_center.csv` into `dir`.
pub fn write_centering(dir: impl AsRef<Path>, res: &CenteringResults) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("fig4_center.csv"), centering_csv(res))?;
    Ok(())
}
