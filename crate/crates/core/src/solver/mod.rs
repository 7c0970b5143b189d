//! The Bregman proximal gradient iteration.
//!
//! Each step computes `x+ in T_lambda(x)`, the minimizer of
//! `f(u) + <grad g(x), u - x> + D_h(u, x) / lambda`, and checks the sufficient
//! decrease inequality `lambda Psi(x+) <= lambda Psi(x) - (1 - lambda L) D_h(x+, x)`.
//! A violation aborts the solve: with `0 < lambda L < 1` it can only come from a
//! wrong smad constant, a wrong prox map, or numerical breakdown.

mod rate;
mod trace;

use std::time::Instant;

use ndarray::{Array1, ArrayView1};

use crate::error::{BpgError, Result};
use crate::kernel::Kernel;
use crate::smad::SmadCertificate;

pub use rate::{rate_fit, rate_fit_steps, RateRegime, RateReport};
pub use trace::{IterateRecord, IterateTrace, TraceViolation, CSV_HEADER};

/// Tolerance scale for decrease checks: `DECREASE_TOL * (1 + |Psi|)`.
pub const DECREASE_TOL: f64 = 1e-8;

/// Iterate norm beyond which a run is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Default relative step tolerance: stop once `||x^k - x^{k-1}|| <= tol (1 + ||x^k||)`.
pub const DEFAULT_TOL_STEP: f64 = 1e-9;

pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Fraction of `1 / L` used as the default step.
pub const DEFAULT_STEP_FRACTION: f64 = 0.99;

/// A composite problem `min f(x) + g(x)` with `g` smooth adaptable relative to
/// the kernel and `f` accessible through its Bregman proximal map.
pub trait Problem {
    fn kernel(&self) -> &Kernel;

    fn smad(&self) -> SmadCertificate;

    fn smooth_value(&self, x: ArrayView1<f64>) -> f64;

    fn smooth_gradient(&self, x: ArrayView1<f64>) -> Array1<f64>;

    /// Value of the nonsmooth part; `+inf` outside a constraint set.
    fn nonsmooth_value(&self, x: ArrayView1<f64>) -> f64;

    /// One selection of `T_lambda(x)`. Must be finite and feasible.
    fn prox_map(&self, x: ArrayView1<f64>, lambda: f64) -> Array1<f64>;

    /// A known lower bound on `inf Psi`.
    fn psi_lower_bound(&self) -> f64;

    fn dim(&self) -> usize {
        self.kernel().dim()
    }

    /// `Psi = f + g`.
    fn objective(&self, x: ArrayView1<f64>) -> f64 {
        let f = self.nonsmooth_value(x);
        if f == f64::INFINITY {
            return f;
        }
        f + self.smooth_value(x)
    }
}

type ValueFn = Box<dyn Fn(ArrayView1<f64>) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(ArrayView1<f64>) -> Array1<f64> + Send + Sync>;
type ProxFn = Box<dyn Fn(ArrayView1<f64>, f64) -> Array1<f64> + Send + Sync>;

/// A problem assembled from closures.
///
/// Without a regularizer (`f = 0`) the prox map is the mirror step
/// `grad h(x+) = grad h(x) - lambda grad g(x)`, solved through the kernel's
/// gradient inverse.
pub struct FnProblem {
    kernel: Kernel,
    smad: SmadCertificate,
    g_value: ValueFn,
    g_gradient: VectorFn,
    f_value: Option<ValueFn>,
    prox: Option<ProxFn>,
    lower_bound: f64,
}

impl FnProblem {
    pub fn smooth<V, G>(kernel: Kernel, smad: SmadCertificate, g_value: V, g_gradient: G) -> Self
    where
        V: Fn(ArrayView1<f64>) -> f64 + Send + Sync + 'static,
        G: Fn(ArrayView1<f64>) -> Array1<f64> + Send + Sync + 'static,
    {
        FnProblem {
            kernel,
            smad,
            g_value: Box::new(g_value),
            g_gradient: Box::new(g_gradient),
            f_value: None,
            prox: None,
            lower_bound: f64::NEG_INFINITY,
        }
    }

    pub fn with_regularizer<F, P>(mut self, f_value: F, prox: P) -> Self
    where
        F: Fn(ArrayView1<f64>) -> f64 + Send + Sync + 'static,
        P: Fn(ArrayView1<f64>, f64) -> Array1<f64> + Send + Sync + 'static,
    {
        self.f_value = Some(Box::new(f_value));
        self.prox = Some(Box::new(prox));
        self
    }

    pub fn with_lower_bound(mut self, lower_bound: f64) -> Self {
        self.lower_bound = lower_bound;
        self
    }
}

impl Problem for FnProblem {
    fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    fn smad(&self) -> SmadCertificate {
        self.smad
    }

    fn smooth_value(&self, x: ArrayView1<f64>) -> f64 {
        (self.g_value)(x)
    }

    fn smooth_gradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        (self.g_gradient)(x)
    }

    fn nonsmooth_value(&self, x: ArrayView1<f64>) -> f64 {
        self.f_value.as_ref().map_or(0.0, |f| f(x))
    }

    fn prox_map(&self, x: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
        if let Some(prox) = &self.prox {
            return prox(x, lambda);
        }
        let target = self.kernel.gradient(x).expect("dimension checked by solver")
            - self.smooth_gradient(x) * lambda;
        self.kernel.gradient_inverse(target.view()).unwrap_or_else(|_| Array1::from_elem(x.len(), f64::NAN))
    }

    fn psi_lower_bound(&self) -> f64 {
        self.lower_bound
    }
}

/// Run parameters. The step size is validated against the smad constant at
/// construction so that `0 < lambda L < 1` always holds.
#[derive(Debug, Clone)]
pub struct BpgConfig {
    lambda: f64,
    pub max_iters: usize,
    /// Relative step tolerance; see [`DEFAULT_TOL_STEP`].
    pub tol_step: f64,
    /// Stop once the subgradient witness norm drops to this value.
    pub tol_residual: Option<f64>,
    pub x0: Array1<f64>,
    /// Record wall-clock time per iteration. Off yields reproducible traces.
    pub record_timing: bool,
}

impl BpgConfig {
    /// Uses the default step `0.99 / L` when `lambda` is `None`.
    pub fn new(x0: Array1<f64>, smad: &SmadCertificate, lambda: Option<f64>) -> Result<Self> {
        let l = smad.constant();
        let lambda = lambda.unwrap_or(DEFAULT_STEP_FRACTION / l);
        validate_step(lambda, l)?;
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(BpgError::NonFinite("starting point"));
        }
        Ok(BpgConfig {
            lambda,
            max_iters: DEFAULT_MAX_ITERS,
            tol_step: DEFAULT_TOL_STEP,
            tol_residual: None,
            x0,
            record_timing: true,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol_step(mut self, tol_step: f64) -> Self {
        self.tol_step = tol_step;
        self
    }

    pub fn with_tol_residual(mut self, tol: Option<f64>) -> Self {
        self.tol_residual = tol;
        self
    }

    pub fn with_timing(mut self, record_timing: bool) -> Self {
        self.record_timing = record_timing;
        self
    }
}

pub fn validate_step(lambda: f64, l: f64) -> Result<()> {
    let product = lambda * l;
    if !(lambda.is_finite() && product > 0.0 && product < 1.0) {
        return Err(BpgError::InvalidStep { lambda, l });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    StepTolerance,
    ResidualTolerance,
    MaxIterations,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::StepTolerance => "step_tolerance",
            Termination::ResidualTolerance => "residual_tolerance",
            Termination::MaxIterations => "max_iterations",
        }
    }

    pub fn by_tolerance(&self) -> bool {
        !matches!(self, Termination::MaxIterations)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: Array1<f64>,
    pub trace: IterateTrace,
    pub termination: Termination,
    pub lambda: f64,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.trace.iterations()
    }

    pub fn final_psi(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.psi)
    }

    pub fn final_witness_norm(&self) -> Option<f64> {
        self.trace.last().and_then(|r| r.witness_norm)
    }

    /// Key-value summary of the run.
    pub fn summary(&self) -> Vec<(&'static str, String)> {
        vec![
            ("termination", self.termination.as_str().to_string()),
            ("iterations", self.iterations().to_string()),
            ("lambda", format!("{:e}", self.lambda)),
            ("final_psi", format!("{:e}", self.final_psi())),
            (
                "final_witness_norm",
                self.final_witness_norm().map_or_else(String::new, |w| format!("{w:e}")),
            ),
        ]
    }
}

fn decrease_tol(psi: f64) -> f64 {
    DECREASE_TOL * (1.0 + psi.abs())
}

struct StepOutcome {
    x: Array1<f64>,
    psi: f64,
    dh_gap: f64,
}

fn checked_step<P: Problem + ?Sized>(
    problem: &P,
    lambda: f64,
    x: ArrayView1<f64>,
    psi_x: f64,
    iteration: usize,
) -> Result<StepOutcome> {
    let next = problem.prox_map(x, lambda);
    if next.len() != x.len() || next.iter().any(|v| !v.is_finite()) {
        return Err(BpgError::NonFiniteIterate(iteration));
    }
    let psi = problem.objective(next.view());
    if !psi.is_finite() {
        return Err(BpgError::NonFiniteIterate(iteration));
    }
    let dh_gap = problem.kernel().bregman_distance(next.view(), x)?;
    if psi_x.is_finite() {
        let l = problem.smad().constant();
        let lhs = lambda * (psi_x - psi);
        let rhs = (1.0 - lambda * l) * dh_gap;
        let tol = decrease_tol(psi_x);
        if lhs < rhs - tol || psi > psi_x + tol {
            return Err(BpgError::DecreaseViolation { iteration, lhs, rhs });
        }
    }
    Ok(StepOutcome { x: next, psi, dh_gap })
}

/// One BPG step `x+ = T_lambda(x)` with the sufficient decrease check.
pub fn bpg_step<P: Problem + ?Sized>(problem: &P, lambda: f64, x: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_dim(problem, x)?;
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(BpgError::InvalidStep { lambda, l: problem.smad().constant() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(BpgError::NonFinite("iterate"));
    }
    let psi_x = problem.objective(x);
    Ok(checked_step(problem, lambda, x, psi_x, 1)?.x)
}

/// The element `grad g(x+) - grad g(x) + (grad h(x) - grad h(x+)) / lambda`
/// of the limiting subdifferential of `Psi` at `x+ = T_lambda(x)`.
pub fn subgradient_witness<P: Problem + ?Sized>(
    problem: &P,
    lambda: f64,
    x_prev: ArrayView1<f64>,
    x_next: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    check_dim(problem, x_prev)?;
    check_dim(problem, x_next)?;
    let h = problem.kernel();
    let dg = problem.smooth_gradient(x_next) - problem.smooth_gradient(x_prev);
    let dh = h.gradient(x_prev)? - h.gradient(x_next)?;
    Ok(dg + dh / lambda)
}

fn check_dim<P: Problem + ?Sized>(problem: &P, x: ArrayView1<f64>) -> Result<()> {
    if x.len() != problem.dim() {
        return Err(BpgError::DimensionMismatch { expected: problem.dim(), got: x.len() });
    }
    Ok(())
}

fn norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// Runs BPG from `config.x0` until a stopping rule fires.
pub fn run_bpg<P: Problem + ?Sized>(problem: &P, config: &BpgConfig) -> Result<SolveResult> {
    check_dim(problem, config.x0.view())?;
    let lambda = config.lambda;
    let l = problem.smad().constant();
    validate_step(lambda, l)?;

    let start = Instant::now();
    let elapsed = || if config.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
    let lower_bound = problem.psi_lower_bound();
    let kernel = problem.kernel();

    let mut x = config.x0.clone();
    let mut psi = problem.objective(x.view());
    let mut grad_g = problem.smooth_gradient(x.view());
    let mut grad_h = kernel.gradient(x.view())?;

    let mut trace = IterateTrace::new(psi, elapsed());
    let mut termination = Termination::MaxIterations;

    for k in 1..=config.max_iters {
        let step = checked_step(problem, lambda, x.view(), psi, k)?;
        if step.psi < lower_bound - decrease_tol(lower_bound) {
            return Err(BpgError::InvalidParameter(format!(
                "objective {:e} at iteration {k} is below the declared lower bound {:e}",
                step.psi, lower_bound
            )));
        }
        let next_grad_g = problem.smooth_gradient(step.x.view());
        let next_grad_h = kernel.gradient(step.x.view())?;

        let dx = &step.x - &x;
        let step_norm = norm(dx.view());
        let dg = &next_grad_g - &grad_g;
        let dh = &grad_h - &next_grad_h;
        let witness = &dg + &(&dh / lambda);
        let witness_norm = norm(witness.view());
        let local_lipschitz =
            (step_norm > 0.0).then(|| norm(dg.view()).max(norm(dh.view())) / step_norm);

        let x_norm = norm(step.x.view());
        trace.push(IterateRecord {
            k,
            psi: step.psi,
            dh_gap: step.dh_gap,
            step_norm,
            witness_norm: Some(witness_norm),
            local_lipschitz,
            elapsed_s: elapsed(),
        });

        x = step.x;
        psi = step.psi;
        grad_g = next_grad_g;
        grad_h = next_grad_h;

        if x_norm > DIVERGENCE_NORM {
            return Err(BpgError::Divergence { iteration: k, norm: x_norm });
        }
        if step_norm <= config.tol_step * (1.0 + x_norm) {
            termination = Termination::StepTolerance;
            break;
        }
        if config.tol_residual.is_some_and(|tol| witness_norm <= tol) {
            termination = Termination::ResidualTolerance;
            break;
        }
    }

    Ok(SolveResult { x, trace, termination, lambda })
}

/// Observed `min_k D_h(x^k, x^{k-1})` over a trace against the bound
/// `lambda (Psi(x^0) - Psi_lb) / (n (1 - lambda L))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBound {
    pub observed: f64,
    pub bound: f64,
}

impl GapBound {
    pub fn holds(&self) -> bool {
        self.observed <= self.bound
    }
}

pub fn min_gap_bound(trace: &IterateTrace, lambda: f64, l: f64, psi_lower_bound: f64) -> GapBound {
    let steps = trace.steps();
    let n = steps.len();
    if n == 0 {
        return GapBound { observed: 0.0, bound: f64::INFINITY };
    }
    let observed = steps.iter().map(|r| r.dh_gap).fold(f64::INFINITY, f64::min);
    let psi0 = trace.initial_psi();
    let bound = lambda * (psi0 - psi_lower_bound) / (n as f64 * (1.0 - lambda * l));
    GapBound { observed, bound }
}

/// Empirical stationarity constant `M (1 + 1/lambda)` with `M` the largest
/// local Lipschitz ratio of `grad g` and `grad h` observed along the trace.
pub fn estimate_rho2(trace: &IterateTrace, lambda: f64) -> Option<f64> {
    trace
        .steps()
        .iter()
        .filter_map(|r| r.local_lipschitz)
        .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.max(m))))
        .map(|m| m * (1.0 + 1.0 / lambda))
}
