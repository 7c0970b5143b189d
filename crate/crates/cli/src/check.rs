//! Sampled verification of the smad certificate of an instance file.

use std::path::PathBuf;

use bpg::smad::sample_ball_pairs;
use bpg::{check_descent_lemma, DescentReport, Kernel, QipInstance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};
use crate::instance::InstanceFile;

#[derive(Debug, Clone)]
pub struct CheckSpec {
    pub instance: PathBuf,
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
    /// Constant to test instead of the analytic one.
    pub smad_override: Option<f64>,
}

impl CheckSpec {
    pub fn new(instance: impl Into<PathBuf>) -> Self {
        CheckSpec { instance: instance.into(), samples: 10_000, radius: 10.0, seed: 0, smad_override: None }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub l: f64,
    pub report: DescentReport,
}

impl CheckOutcome {
    pub fn render(&self) -> String {
        format!(
            "smad_constant={:e}\nsamples={}\nviolations={}\nworst_margin={:e}\nmin_relative_margin={:e}\npassed={}\n",
            self.l,
            self.report.margins.len(),
            self.report.violations,
            self.report.worst_margin(),
            self.report.min_relative_margin(),
            self.report.passed
        )
    }
}

/// Checks `|D_g(x, y)| <= L D_h(x, y)` for the quartic kernel on uniform
/// pairs from the ball of the given radius.
pub fn check_instance(inst: &QipInstance, l: f64, samples: usize, radius: f64, seed: u64) -> Result<DescentReport> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(CliError::Spec(format!("radius = {radius} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = sample_ball_pairs(&mut rng, inst.dim(), radius, samples);
    let kernel = Kernel::quartic(inst.dim())?;
    let report = check_descent_lemma(
        |x| inst.value(x).expect("sampled in dimension"),
        |x| inst.gradient(x).expect("sampled in dimension"),
        &kernel,
        l,
        &pairs,
    )?;
    Ok(report)
}

pub fn run_check(spec: &CheckSpec) -> Result<CheckOutcome> {
    let inst = InstanceFile::read(&spec.instance)?.to_instance()?;
    let l = match spec.smad_override {
        Some(l) => bpg::SmadCertificate::user(l)?.constant(),
        None => inst.smad_certificate()?.constant(),
    };
    let report = check_instance(&inst, l, spec.samples, spec.radius, spec.seed)?;
    Ok(CheckOutcome { l, report })
}
