use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use geoipm::harness::experiments::{run_centering_profiles, run_step_counts, ExperimentConfig};
use geoipm::harness::{generate_random_sdp, write_centering, write_step_counts, ProblemFile};
use geoipm::random::{random_interior, SeededRng};
use geoipm::solver::{
    longstep, shortstep, LongStepParams, Run, ShortStepParams, Status, DEFAULT_CENTER_CAP, DEFAULT_OUTER_CAP,
};
use geoipm::subspace::{duality_gap, feasible_point};
use geoipm::Error;
use serde::Serialize;

const EXIT_CAP: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "geoipm", version, about = "Geodesic interior-point solvers for symmetric cone programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random SDP instance as a problem file.
    Gen(GenArgs),
    /// Follow the central path of a problem file from μ0 down to μf.
    Solve(SolveArgs),
    /// Run an experiment driver and write its CSV files.
    Bench(BenchArgs),
}

#[derive(clap::Args, Debug)]
struct GenArgs {
    /// Matrix side.
    #[arg(long)]
    n: usize,
    #[arg(long = "dim-l", default_value_t = 10)]
    dim_l: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Store the equivalent operator form instead of the basis form.
    #[arg(long)]
    operator: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Algo {
    Short,
    Long,
}

#[derive(clap::Args, Debug)]
struct SolveArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Long)]
    algo: Algo,
    #[arg(long, default_value_t = 1.0)]
    mu0: f64,
    #[arg(long, default_value_t = 1e-4)]
    muf: f64,
    /// Final centering tolerance (default 1e-4).
    #[arg(long)]
    eps: Option<f64>,
    /// Short-step: neighborhood size (default ½). Long-step: divergence
    /// allowed after a μ-update (default 100).
    #[arg(long)]
    beta: Option<f64>,
    /// Long-step recentering tolerance (default 10).
    #[arg(long)]
    alpha: Option<f64>,
    /// Fraction of the step bound per centering step (default ½).
    #[arg(long)]
    gamma: Option<f64>,
    /// Newton-step cap per centering call.
    #[arg(long, default_value_t = DEFAULT_CENTER_CAP)]
    max_newton: usize,
    #[arg(long, default_value_t = DEFAULT_OUTER_CAP)]
    max_outer: usize,
    /// Keep the last long-step μ-update from undershooting μf.
    #[arg(long)]
    clamp_mu: bool,
    /// Center the start point at μ0 before the short-step loop.
    #[arg(long)]
    precenter: bool,
    /// Start from a random interior point drawn with this seed instead of e.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-Newton-step CSV trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// JSON file receiving the primal-dual pair extracted at the final iterate.
    #[arg(long = "feasible-out")]
    feasible_out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Experiment {
    /// Newton-step totals of both methods across problem sizes.
    StepCounts,
    /// Centering runs from several distances to the central point.
    Centering,
}

#[derive(clap::Args, Debug)]
struct BenchArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON experiment configuration; defaults apply to omitted fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::NumericalFailure(_) | Error::DegenerateConstraints | Error::Domain { .. } | Error::ConeMismatch => {
                EXIT_NUMERICAL
            }
            _ => EXIT_USAGE,
        };
        Failure { code, message: err.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

#[derive(Serialize)]
struct FeasibleOutput<'a> {
    x: &'a [f64],
    s: &'a [f64],
    mu: f64,
    gap: f64,
}

fn gen(args: &GenArgs) -> Result<(), Failure> {
    let mut problem = generate_random_sdp(args.n, args.dim_l, args.seed)?;
    if args.operator {
        problem = problem.to_operator_form()?;
    }
    let file = ProblemFile::from_problem(&problem);
    match &args.out {
        Some(path) => file.save(path)?,
        None => println!("{}", file.to_json()?),
    }
    Ok(())
}

fn write_trace(path: &Path, run: &Run) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    if run.trace.steps.is_empty() {
        w.write_record(["outer", "mu", "h_ub", "h_lb", "norm_d", "norm_d_inf", "step", "elapsed"])
            .map_err(|e| usage(e.to_string()))?;
    }
    for rec in &run.trace.steps {
        w.serialize(rec).map_err(|e| usage(e.to_string()))?;
    }
    w.flush().map_err(|e| usage(e.to_string()))?;
    Ok(())
}

fn solve(args: &SolveArgs) -> Result<(), Failure> {
    let problem = ProblemFile::load(&args.input)?.to_problem()?;
    let cone = problem.cone();
    let w0 = match args.seed {
        Some(seed) => random_interior(cone, &mut SeededRng::new(seed), 0.5),
        None => cone.identity(),
    };
    let run = match args.algo {
        Algo::Short => {
            let mut params = ShortStepParams::new(args.beta.unwrap_or(0.5), args.eps.unwrap_or(1e-4), cone.rank())?;
            params.precenter = args.precenter;
            params.max_outer = args.max_outer;
            if args.alpha.is_some() || args.gamma.is_some() {
                eprintln!("note: --alpha and --gamma apply to the long-step method only");
            }
            shortstep(&problem, &w0, args.mu0, args.muf, &params)?
        }
        Algo::Long => {
            let d = LongStepParams::default();
            let params = LongStepParams {
                beta: args.beta.unwrap_or(d.beta),
                alpha: args.alpha.unwrap_or(d.alpha),
                eps: args.eps.unwrap_or(d.eps),
                gamma: args.gamma.unwrap_or(d.gamma),
                max_newton: args.max_newton,
                max_outer: args.max_outer,
                clamp_mu: args.clamp_mu,
            };
            longstep(&problem, &w0, args.mu0, args.muf, &params)?
        }
    };

    if let Some(path) = &args.trace {
        write_trace(path, &run)?;
    }
    println!("status: {}", run.trace.status);
    println!("newton_steps: {}", run.trace.newton_steps());
    println!("mu_updates: {}", run.trace.mu_history.len() - 1);
    println!("mu: {:e}", run.state.mu);
    println!("h_ub: {:e}", run.trace.final_h_ub);

    if let Some(path) = &args.feasible_out {
        match feasible_point(&problem, &run.state.w, run.state.mu)? {
            Some((x, s)) => {
                let out = FeasibleOutput { x: x.coords(), s: s.coords(), mu: run.state.mu, gap: duality_gap(&x, &s) };
                let text = serde_json::to_string_pretty(&out).map_err(|e| usage(e.to_string()))?;
                std::fs::write(path, text + "\n").map_err(Error::from)?;
                println!("gap: {:e}", out.gap);
            }
            None => eprintln!("note: no feasible pair at the final iterate (‖d‖∞ > 1); {} not written", path.display()),
        }
    }

    match &run.trace.status {
        Status::Converged => Ok(()),
        Status::IterationCap => Err(Failure { code: EXIT_CAP, message: "iteration cap reached".into() }),
        Status::NumericalFailure(msg) => {
            Err(Failure { code: EXIT_NUMERICAL, message: format!("numerical failure: {msg}") })
        }
    }
}

fn bench(args: &BenchArgs) -> Result<(), Failure> {
    let cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    match args.experiment {
        Experiment::StepCounts => {
            let res = run_step_counts(&cfg)?;
            write_step_counts(&args.out, &res)?;
            for s in res.summary() {
                println!("n={} {}: mean {:.2} std {:.2}", s.n, s.algo.name(), s.mean, s.std);
            }
            if !res.errors.is_empty() {
                eprintln!("warning: {} trial runs failed; see fig3_errors.csv", res.errors.len());
            }
        }
        Experiment::Centering => {
            let res = run_centering_profiles(&cfg)?;
            write_centering(&args.out, &res)?;
            println!("{} rows written", res.rows.len());
            for (id, e) in &res.errors {
                eprintln!("warning: init {id}: {e}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("geoipm: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
