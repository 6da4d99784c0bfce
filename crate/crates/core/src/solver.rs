//! Path-following algorithms: the short-step method with fixed μ
//! divisor, the damped centering procedure, and the long-step method that
//! alternates centering with the largest admissible μ-decrease.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{q_inv, GeodesicRay};
use crate::jordan::Element;
use crate::subspace::{newton_direction, ConicProblem, GwStats, NewtonData};

pub const DEFAULT_CENTER_CAP: usize = 10_000;
pub const DEFAULT_OUTER_CAP: usize = 1_000;

/// Tolerance used by [`oracle_center`].
pub const ORACLE_EPS: f64 = 1e-12;

/// Parameters of the short-step method derived from `(β, ε, n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortStepParams {
    pub beta: f64,
    pub eps: f64,
    pub n: usize,
    /// μ divisor per outer iteration.
    pub k: f64,
    /// Full Newton steps per outer iteration.
    pub m: u32,
    /// `q⁻¹(β) − ε`.
    pub zeta: f64,
    /// `2 q⁻¹(ζ²)`, the rate constant in the step budget.
    pub c: f64,
    /// Run [`oracle_center`] on the start point first.
    pub precenter: bool,
    pub max_outer: usize,
}

impl ShortStepParams {
    /// Requires `0 < β ≤ ½` and `0 < ε < q⁻¹(β)`.
    pub fn new(beta: f64, eps: f64, n: usize) -> Result<ShortStepParams> {
        if !(beta > 0.0 && beta <= 0.5) {
            return Err(Error::InvalidParameter(format!("short-step β must lie in (0, 1/2], got {beta}")));
        }
        let qb = q_inv(beta)?;
        if !(eps > 0.0 && eps < qb) {
            return Err(Error::InvalidParameter(format!("short-step ε must lie in (0, {qb}), got {eps}")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("rank must be positive".into()));
        }
        let mut m = 1u32;
        while beta.powf(2f64.powi(m as i32)) > eps * eps {
            m += 1;
        }
        let zeta = qb - eps;
        let k = (2.0 * q_inv(zeta * zeta / n as f64)?).exp();
        let c = 2.0 * q_inv(zeta * zeta)?;
        Ok(ShortStepParams { beta, eps, n, k, m, zeta, c, precenter: false, max_outer: DEFAULT_OUTER_CAP })
    }

    /// `⌈log(μ0/μ_f) / log k⌉`.
    pub fn outer_iterations(&self, mu0: f64, mu_f: f64) -> usize {
        if mu0 <= mu_f {
            0
        } else {
            ((mu0 / mu_f).ln() / self.k.ln()).ceil() as usize
        }
    }

    /// `m ⌈c⁻¹ √n log(μ0/μ_f)⌉`, the worst-case Newton-step count.
    pub fn step_budget(&self, mu0: f64, mu_f: f64) -> usize {
        if mu0 <= mu_f {
            return 0;
        }
        self.m as usize * ((self.n as f64).sqrt() * (mu0 / mu_f).ln() / self.c).ceil() as usize
    }
}

/// Parameters of the long-step method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LongStepParams {
    /// Divergence bound accepted right after a μ-update.
    pub beta: f64,
    /// Recentering tolerance between μ-updates.
    pub alpha: f64,
    /// Final centering tolerance.
    pub eps: f64,
    /// Fraction of the step bound taken by each centering step.
    pub gamma: f64,
    /// Newton-step cap per centering call.
    pub max_newton: usize,
    pub max_outer: usize,
    /// Keep μ from dropping below μ_f in the last update.
    pub clamp_mu: bool,
}

impl Default for LongStepParams {
    fn default() -> Self {
        LongStepParams {
            beta: 100.0,
            alpha: 10.0,
            eps: 1e-4,
            gamma: 0.5,
            max_newton: DEFAULT_CENTER_CAP,
            max_outer: DEFAULT_OUTER_CAP,
            clamp_mu: false,
        }
    }
}

impl LongStepParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > self.alpha && self.alpha > self.eps && self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "long-step tolerances need β > α > ε > 0, got β = {}, α = {}, ε = {}",
                self.beta, self.alpha, self.eps
            )));
        }
        validate_gamma(self.gamma)
    }
}

fn validate_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("γ must lie in (0, 1), got {gamma}")))
    }
}

/// One Newton step; the divergence data refer to the point before the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub outer: usize,
    pub mu: f64,
    pub h_ub: f64,
    pub h_lb: f64,
    pub norm_d: f64,
    pub norm_d_inf: f64,
    pub step: f64,
    /// Seconds since the run started (0 where no clock is available).
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Converged,
    IterationCap,
    NumericalFailure(String),
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Converged => write!(f, "converged"),
            Status::IterationCap => write!(f, "iteration cap reached"),
            Status::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub steps: Vec<StepRecord>,
    /// `(cumulative Newton steps, μ)` at the start and after every μ-update.
    pub mu_history: Vec<(usize, f64)>,
    pub status: Status,
    /// `h_ub` at the returned iterate (NaN after a numerical failure).
    pub final_h_ub: f64,
}

impl SolverTrace {
    fn new(mu0: f64) -> SolverTrace {
        SolverTrace { steps: Vec::new(), mu_history: vec![(0, mu0)], status: Status::Converged, final_h_ub: f64::NAN }
    }

    pub fn newton_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub w: Element,
    pub mu: f64,
}

/// Final iterate and trace of a solver run.
#[derive(Debug, Clone)]
pub struct Run {
    pub state: IterateState,
    pub trace: SolverTrace,
}

#[cfg(not(target_arch = "wasm32"))]
struct Clock(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Clock {
    fn start() -> Clock {
        Clock(std::time::Instant::now())
    }
    fn elapsed(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(target_arch = "wasm32")]
struct Clock;

#[cfg(target_arch = "wasm32")]
impl Clock {
    fn start() -> Clock {
        Clock
    }
    fn elapsed(&self) -> f64 {
        0.0
    }
}

fn check_start(w0: &Element, problem: &ConicProblem, mu: f64) -> Result<()> {
    if w0.cone() != problem.cone() {
        return Err(Error::ConeMismatch);
    }
    let eig = w0.eigen()?;
    if !eig.is_interior() {
        return Err(Error::Domain { op: "start point", eigenvalue: eig.min() });
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("μ must be positive and finite, got {mu}")));
    }
    Ok(())
}

/// Shared bookkeeping for one run.
struct Tracker {
    clock: Clock,
    trace: SolverTrace,
}

impl Tracker {
    fn new(mu0: f64) -> Tracker {
        Tracker { clock: Clock::start(), trace: SolverTrace::new(mu0) }
    }

    fn step(&mut self, outer: usize, nd: &NewtonData, w: &Element, t: f64) -> Result<Element> {
        let next = GeodesicRay::new(w.clone(), nd.d.clone())?.point(t)?;
        self.trace.steps.push(StepRecord {
            outer,
            mu: nd.mu,
            h_ub: nd.h_ub,
            h_lb: nd.h_lb,
            norm_d: nd.norm_d,
            norm_d_inf: nd.norm_d_inf,
            step: t,
            elapsed: self.clock.elapsed(),
        });
        Ok(next)
    }

    fn finish(mut self, w: Element, mu: f64, status: Status, final_h_ub: f64) -> Run {
        self.trace.status = status;
        self.trace.final_h_ub = final_h_ub;
        Run { state: IterateState { w, mu }, trace: self.trace }
    }
}

enum CenterOutcome {
    Done(Element, NewtonData),
    Stopped(Element, Status),
}

/// Centering loop shared by [`center`] and [`longstep`].
#[allow(clippy::too_many_arguments)]
fn center_loop(
    problem: &ConicProblem,
    mut w: Element,
    mu: f64,
    eps: f64,
    gamma: f64,
    cap: usize,
    outer: usize,
    tracker: &mut Tracker,
    observe: &mut dyn FnMut(&Element, &NewtonData),
) -> CenterOutcome {
    let mut taken = 0;
    loop {
        let nd = match newton_direction(problem, &w, mu) {
            Ok(nd) => nd,
            Err(e) => return CenterOutcome::Stopped(w, Status::NumericalFailure(e.to_string())),
        };
        observe(&w, &nd);
        if nd.h_ub <= eps {
            return CenterOutcome::Done(w, nd);
        }
        if taken >= cap {
            return CenterOutcome::Stopped(w, Status::IterationCap);
        }
        let t = gamma * nd.t_max;
        if !t.is_finite() {
            return CenterOutcome::Stopped(w, Status::NumericalFailure("non-finite step size".into()));
        }
        w = match tracker.step(outer, &nd, &w, t) {
            Ok(next) => next,
            Err(e) => return CenterOutcome::Stopped(w, Status::NumericalFailure(e.to_string())),
        };
        taken += 1;
    }
}

/// Damped Newton iteration at fixed μ until `h_ub(w, μ) ≤ ε`, stepping
/// `γ · t_max` along the Newton geodesic.
pub fn center(problem: &ConicProblem, w0: &Element, mu: f64, eps: f64, gamma: f64, cap: usize) -> Result<Run> {
    center_with_observer(problem, w0, mu, eps, gamma, cap, |_, _| {})
}

/// [`center`] calling `observer` at every visited iterate, including the
/// start and the returned point.
pub fn center_with_observer(
    problem: &ConicProblem,
    w0: &Element,
    mu: f64,
    eps: f64,
    gamma: f64,
    cap: usize,
    mut observer: impl FnMut(&Element, &NewtonData),
) -> Result<Run> {
    check_start(w0, problem, mu)?;
    validate_gamma(gamma)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("ε must be positive, got {eps}")));
    }
    let mut tracker = Tracker::new(mu);
    Ok(match center_loop(problem, w0.clone(), mu, eps, gamma, cap, 0, &mut tracker, &mut observer) {
        CenterOutcome::Done(w, nd) => tracker.finish(w, mu, Status::Converged, nd.h_ub),
        CenterOutcome::Stopped(w, status) => {
            let h = final_h_ub(problem, &w, mu);
            tracker.finish(w, mu, status, h)
        }
    })
}

fn final_h_ub(problem: &ConicProblem, w: &Element, mu: f64) -> f64 {
    newton_direction(problem, w, mu).map(|nd| nd.h_ub).unwrap_or(f64::NAN)
}

/// High-accuracy central point `ŵ(μ)`: centering to [`ORACLE_EPS`] with
/// `γ = ½`, followed by full Newton steps while they still reduce `h_ub`.
pub fn oracle_center(problem: &ConicProblem, mu: f64, warm: Option<&Element>) -> Result<Element> {
    let start = warm.cloned().unwrap_or_else(|| problem.cone().identity());
    let run = center(problem, &start, mu, ORACLE_EPS, 0.5, DEFAULT_CENTER_CAP)?;
    if !run.trace.converged() {
        return Err(Error::NumericalFailure(format!("central-point oracle did not converge: {}", run.trace.status)));
    }
    let mut w = run.state.w;
    let mut nd = newton_direction(problem, &w, mu)?;
    for _ in 0..3 {
        if nd.norm_d == 0.0 {
            break;
        }
        let next = GeodesicRay::new(w.clone(), nd.d.clone())?.point(1.0)?;
        let nd_next = newton_direction(problem, &next, mu)?;
        if !(nd_next.h_ub < nd.h_ub) {
            break;
        }
        w = next;
        nd = nd_next;
    }
    Ok(w)
}

/// Short-step method: divide μ by `k`, then take `m` full Newton steps,
/// until `μ ≤ μ_f`.
pub fn shortstep(problem: &ConicProblem, w0: &Element, mu0: f64, mu_f: f64, params: &ShortStepParams) -> Result<Run> {
    check_start(w0, problem, mu0)?;
    if !(mu_f > 0.0) {
        return Err(Error::InvalidParameter(format!("μ_f must be positive, got {mu_f}")));
    }
    if params.n != problem.cone().rank() {
        return Err(Error::InvalidParameter(format!(
            "parameters derived for rank {} but the cone has rank {}",
            params.n,
            problem.cone().rank()
        )));
    }
    let mut w = if params.precenter { oracle_center(problem, mu0, Some(w0))? } else { w0.clone() };
    let mut tracker = Tracker::new(mu0);
    let mut mu = mu0;
    let mut outer = 0;
    while mu > mu_f {
        if outer >= params.max_outer {
            let h = final_h_ub(problem, &w, mu);
            return Ok(tracker.finish(w, mu, Status::IterationCap, h));
        }
        mu /= params.k;
        outer += 1;
        for _ in 0..params.m {
            let stepped = newton_direction(problem, &w, mu).and_then(|nd| tracker.step(outer, &nd, &w, 1.0));
            match stepped {
                Ok(next) => w = next,
                Err(e) => return Ok(tracker.finish(w, mu, Status::NumericalFailure(e.to_string()), f64::NAN)),
            }
        }
        let steps = tracker.trace.steps.len();
        tracker.trace.mu_history.push((steps, mu));
    }
    let h = final_h_ub(problem, &w, mu);
    Ok(tracker.finish(w, mu, Status::Converged, h))
}

/// Long-step method.
pub fn longstep(problem: &ConicProblem, w0: &Element, mu0: f64, mu_f: f64, params: &LongStepParams) -> Result<Run> {
    longstep_with_observer(problem, w0, mu0, mu_f, params, |_| {})
}

/// [`longstep`] calling `observer` after every centering, including the
/// final one.
pub fn longstep_with_observer(
    problem: &ConicProblem,
    w0: &Element,
    mu0: f64,
    mu_f: f64,
    params: &LongStepParams,
    mut observer: impl FnMut(&IterateState),
) -> Result<Run> {
    check_start(w0, problem, mu0)?;
    params.validate()?;
    if !(mu_f > 0.0) {
        return Err(Error::InvalidParameter(format!("μ_f must be positive, got {mu_f}")));
    }
    let mut tracker = Tracker::new(mu0);
    let mut w = w0.clone();
    let mut mu = mu0;
    let mut outer = 0;
    while mu > mu_f {
        if outer >= params.max_outer {
            let h = final_h_ub(problem, &w, mu);
            return Ok(tracker.finish(w, mu, Status::IterationCap, h));
        }
        let nd = match center_loop(
            problem,
            w,
            mu,
            params.alpha,
            params.gamma,
            params.max_newton,
            outer,
            &mut tracker,
            &mut |_, _| {},
        ) {
            CenterOutcome::Done(wc, nd) => {
                w = wc;
                nd
            }
            CenterOutcome::Stopped(wc, status) => {
                let h = final_h_ub(problem, &wc, mu);
                return Ok(tracker.finish(wc, mu, status, h));
            }
        };
        observer(&IterateState { w: w.clone(), mu });
        let stats = match GwStats::from_newton(&nd) {
            Ok(s) => s,
            Err(e) => return Ok(tracker.finish(w, mu, Status::NumericalFailure(e.to_string()), nd.h_ub)),
        };
        let mut next = stats.min_mu(mu, params.beta);
        if params.clamp_mu {
            next = next.max(mu_f);
        }
        if !(next < mu) {
            let status = Status::NumericalFailure(format!("μ-update stalled at μ = {mu:e}"));
            return Ok(tracker.finish(w, mu, status, nd.h_ub));
        }
        mu = next;
        outer += 1;
        let steps = tracker.trace.steps.len();
        tracker.trace.mu_history.push((steps, mu));
    }
    match center_loop(problem, w, mu, params.eps, params.gamma, params.max_newton, outer, &mut tracker, &mut |_, _| {})
    {
        CenterOutcome::Done(w, nd) => {
            observer(&IterateState { w: w.clone(), mu });
            Ok(tracker.finish(w, mu, Status::Converged, nd.h_ub))
        }
        CenterOutcome::Stopped(w, status) => {
            let h = final_h_ub(problem, &w, mu);
            Ok(tracker.finish(w, mu, status, h))
        }
    }
}
