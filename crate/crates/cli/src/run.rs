//! Multi-start solve orchestration and artifact emission.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bpg::{make_problem, run_bpg, BpgConfig, BpgError, Kernel, KernelKind, Problem, QipProblem, Regularizer, SolveResult};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::instance::InstanceFile;

/// Environment variable overriding the worker pool size.
pub const WORKERS_ENV: &str = "BPG_WORKERS";

/// Start radii, cycled by start index.
pub const START_RADII: [f64; 3] = [0.1, 1.0, 10.0];

/// Exit code for runs in which some start hit a solver diagnostic.
pub const EXIT_SOLVER_DIAGNOSTIC: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    /// `0.99 / L`; needs the certified kernel pairing.
    Auto,
    Value(f64),
}

impl FromStr for LambdaSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(LambdaSpec::Auto);
        }
        s.parse::<f64>().map(LambdaSpec::Value).map_err(|_| format!("expected `auto` or a number, got `{s}`"))
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub instance: PathBuf,
    /// Replaces the regularizer stored in the instance file.
    pub regularizer: Option<Regularizer>,
    pub kernel: KernelKind,
    /// User-supplied smad constant; mandatory for the energy kernel.
    pub smad_override: Option<f64>,
    pub lambda: LambdaSpec,
    pub max_iters: usize,
    pub tol_step: f64,
    pub tol_residual: Option<f64>,
    pub seed: u64,
    pub starts: usize,
    pub out: PathBuf,
    /// Off writes `0` in the timing column so traces are byte-reproducible.
    pub record_timing: bool,
    /// Worker pool size; falls back to [`WORKERS_ENV`], then available parallelism.
    pub workers: Option<usize>,
}

impl RunSpec {
    pub fn new(instance: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunSpec {
            instance: instance.into(),
            regularizer: None,
            kernel: KernelKind::QuarticPlusQuadratic,
            smad_override: None,
            lambda: LambdaSpec::Auto,
            max_iters: bpg::solver::DEFAULT_MAX_ITERS,
            tol_step: bpg::solver::DEFAULT_TOL_STEP,
            tol_residual: None,
            seed: 0,
            starts: 1,
            out: out.into(),
            record_timing: true,
            workers: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StartOutcome {
    pub index: usize,
    pub radius: f64,
    pub result: std::result::Result<SolveResult, BpgError>,
}

impl StartOutcome {
    pub fn final_psi(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.final_psi())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub l: f64,
    pub lambda: f64,
    pub starts: Vec<StartOutcome>,
    /// Index of the start with the smallest final objective (lowest index on ties).
    pub best: Option<usize>,
}

/// `x0 = r u` with `u` uniform on the unit sphere and `r` cycling through
/// [`START_RADII`]. Each start draws from its own stream of the seed.
pub fn start_point(seed: u64, index: usize, dim: usize) -> (f64, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let radius = START_RADII[index % START_RADII.len()];
    loop {
        let u: Array1<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = u.dot(&u).sqrt();
        if n > 0.0 {
            return (radius, u * (radius / n));
        }
    }
}

fn worker_count(spec: &RunSpec) -> Result<usize> {
    if let Some(n) = spec.workers {
        return Ok(n.max(1));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Spec(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Loads the instance and binds it to the kernel, enforcing the spec-level
/// contracts before any solve starts.
pub fn prepare(spec: &RunSpec) -> Result<(InstanceFile, QipProblem, f64)> {
    if spec.starts == 0 {
        return Err(CliError::Spec("starts must be at least 1".into()));
    }
    if !(spec.tol_step.is_finite() && spec.tol_step >= 0.0) {
        return Err(CliError::Spec(format!("tol_step = {} must be finite and nonnegative", spec.tol_step)));
    }
    if spec.lambda == LambdaSpec::Auto && spec.kernel != KernelKind::QuarticPlusQuadratic {
        return Err(CliError::Spec("lambda = auto requires the quartic kernel".into()));
    }
    let file = InstanceFile::read(&spec.instance)?;
    let mut inst = file.to_instance()?;
    if let Some(reg) = spec.regularizer {
        inst = inst.with_regularizer(reg)?;
    }
    let kernel = Kernel::new(spec.kernel, inst.dim())?;
    let problem = make_problem(inst, kernel, spec.smad_override)?;
    let lambda = match spec.lambda {
        LambdaSpec::Auto => None,
        LambdaSpec::Value(v) => Some(v),
    };
    // Validates 0 < lambda L < 1 once for all starts.
    let probe = BpgConfig::new(Array1::zeros(problem.dim()), &problem.smad(), lambda)?;
    Ok((file, problem, probe.lambda()))
}

fn solve_start(spec: &RunSpec, problem: &QipProblem, lambda: f64, index: usize) -> StartOutcome {
    let (radius, x0) = start_point(spec.seed, index, problem.dim());
    let result = BpgConfig::new(x0, &problem.smad(), Some(lambda)).and_then(|config| {
        let config = config
            .with_max_iters(spec.max_iters)
            .with_tol_step(spec.tol_step)
            .with_tol_residual(spec.tol_residual)
            .with_timing(spec.record_timing);
        run_bpg(problem, &config)
    });
    StartOutcome { index, radius, result }
}

fn start_name(prefix: &str, index: usize, ext: &str) -> String {
    format!("{prefix}_start_{index:03}.{ext}")
}

fn fmt_vec(x: &Array1<f64>) -> String {
    x.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",")
}

fn start_summary(outcome: &StartOutcome, problem: &QipProblem) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "start={}", outcome.index);
    let _ = writeln!(text, "radius={:e}", outcome.radius);
    let _ = writeln!(text, "certified={}", problem.is_certified());
    let _ = writeln!(text, "smad_constant={:e}", problem.smad().constant());
    match &outcome.result {
        Ok(result) => {
            let _ = writeln!(text, "status=ok");
            for (key, value) in result.summary() {
                let _ = writeln!(text, "{key}={value}");
            }
        }
        Err(e) => {
            let _ = writeln!(text, "status=error");
            let _ = writeln!(text, "error={e}");
        }
    }
    text
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_artifacts(spec: &RunSpec, problem: &QipProblem, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(&spec.out).map_err(|e| CliError::io(&spec.out, e))?;
    for start in &outcome.starts {
        if let Ok(result) = &start.result {
            let path = spec.out.join(start_name("trace", start.index, "csv"));
            let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
            result.trace.write_csv(BufWriter::new(file)).map_err(|e| CliError::io(&path, e))?;
        }
        let path = spec.out.join(start_name("summary", start.index, "txt"));
        write_text(&path, &start_summary(start, problem))?;
    }

    let mut best = String::new();
    let _ = writeln!(best, "starts={}", outcome.starts.len());
    let _ = writeln!(best, "failed_starts={}", outcome.starts.iter().filter(|s| s.result.is_err()).count());
    let _ = writeln!(best, "lambda={:e}", outcome.lambda);
    let _ = writeln!(best, "smad_constant={:e}", outcome.l);
    if let Some(i) = outcome.best {
        let result = outcome.starts[i].result.as_ref().expect("best start succeeded");
        let _ = writeln!(best, "best_start={i}");
        for (key, value) in result.summary() {
            let _ = writeln!(best, "{key}={value}");
        }
        let _ = writeln!(best, "x={}", fmt_vec(&result.x));
    }
    write_text(&spec.out.join("best.txt"), &best)
}

/// Runs every start, writes `trace_start_NNN.csv`, `summary_start_NNN.txt`
/// and `best.txt` under `spec.out`, and reports the exit code: `0` when all
/// starts terminated cleanly, [`EXIT_SOLVER_DIAGNOSTIC`] otherwise.
/// Validation and I/O failures are returned as errors.
pub fn run_from_spec(spec: &RunSpec) -> Result<RunOutcome> {
    let (_, problem, lambda) = prepare(spec)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(spec)?)
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    let starts: Vec<StartOutcome> =
        pool.install(|| (0..spec.starts).into_par_iter().map(|i| solve_start(spec, &problem, lambda, i)).collect());

    let best = starts
        .iter()
        .filter_map(|s| s.final_psi().map(|psi| (s.index, psi)))
        .fold(None, |acc: Option<(usize, f64)>, (i, psi)| match acc {
            Some((_, b)) if b <= psi => acc,
            _ => Some((i, psi)),
        })
        .map(|(i, _)| i);
    let exit_code = if starts.iter().all(|s| s.result.is_ok()) { 0 } else { EXIT_SOLVER_DIAGNOSTIC };
    let outcome = RunOutcome { exit_code, l: problem.smad().constant(), lambda, starts, best };
    write_artifacts(spec, &problem, &outcome)?;
    Ok(outcome)
}
