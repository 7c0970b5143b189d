//! Synthetic instances with a planted sparse ground truth.

use bpg::{QipInstance, Regularizer};
use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{CliError, Result};
use crate::instance::InstanceFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MeasurementKind {
    /// `A_i = (G + G^T) / 2` with standard normal `G`.
    Dense,
    /// `A_i = a_i a_i^T` with `a_i ~ N(0, I)` (phase retrieval).
    RankOne,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateParams {
    pub d: usize,
    pub m: usize,
    pub s_true: usize,
    pub noise: f64,
    pub seed: u64,
    pub kind: MeasurementKind,
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws `x*` with exactly `s_true` standard normal nonzeros, the
/// measurements, and `b_i = x*^T A_i x* + noise eps_i`. The instance carries
/// the l0 constraint `s = s_true`; solves may override it.
pub fn generate_instance(params: &GenerateParams) -> Result<InstanceFile> {
    let GenerateParams { d, m, s_true, noise, seed, kind } = *params;
    if d < 2 {
        return Err(CliError::Spec(format!("d = {d} must be at least 2")));
    }
    if m < 1 {
        return Err(CliError::Spec("m must be at least 1".into()));
    }
    if s_true < 1 || s_true >= d {
        return Err(CliError::Spec(format!("s_true = {s_true} must satisfy 1 <= s_true < d = {d}")));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(CliError::Spec(format!("noise = {noise} must be finite and nonnegative")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support = index::sample(&mut rng, d, s_true).into_vec();
    support.sort_unstable();
    let mut x_true = Array1::zeros(d);
    for &i in &support {
        x_true[i] = normal(&mut rng);
    }

    let reg = Regularizer::L0Ball { s: s_true };
    let zeros = Array1::zeros(m);
    let inst = match kind {
        MeasurementKind::Dense => {
            let matrices = (0..m)
                .map(|_| {
                    let g = Array2::from_shape_fn((d, d), |_| normal(&mut rng));
                    Array2::from_shape_fn((d, d), |(i, j)| 0.5 * (g[[i, j]] + g[[j, i]]))
                })
                .collect();
            QipInstance::dense(matrices, zeros, reg)?
        }
        MeasurementKind::RankOne => {
            let factors = (0..m).map(|_| (0..d).map(|_| normal(&mut rng)).collect()).collect();
            QipInstance::rank_one(factors, zeros, reg)?
        }
    };

    // The residuals at x* are computed by the same routine the objective
    // uses, so they vanish exactly when there is no noise.
    let b: Array1<f64> = (0..m).map(|i| inst.quadratic_form(i, x_true.view()) + noise * normal(&mut rng)).collect();
    let mut file = InstanceFile::from_instance(&inst, Some(&x_true));
    file.b = b.to_vec();
    file.validate()?;
    Ok(file)
}
