//! L-smooth adaptability constants and a sampled descent-lemma checker.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{BpgError, Result};
use crate::kernel::Kernel;
use crate::linalg::{asymmetry, spectral_norm};

/// Entrywise asymmetry allowed for a matrix to count as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Relative slack of the sampled descent-lemma check.
pub const DESCENT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmadSource {
    AnalyticQip,
    UserSupplied,
}

/// A constant `L > 0` such that `L h - g` (and `L h + g`) are convex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmadCertificate {
    l: f64,
    source: SmadSource,
}

impl SmadCertificate {
    pub fn new(l: f64, source: SmadSource) -> Result<Self> {
        if !l.is_finite() || l <= 0.0 {
            return Err(BpgError::InvalidParameter(format!("smad constant must be positive and finite, got {l}")));
        }
        Ok(SmadCertificate { l, source })
    }

    pub fn user(l: f64) -> Result<Self> {
        Self::new(l, SmadSource::UserSupplied)
    }

    pub fn constant(&self) -> f64 {
        self.l
    }

    pub fn source(&self) -> SmadSource {
        self.source
    }
}

/// `sum_i (3 ||A_i||^2 + ||A_i|| |b_i|)` from precomputed spectral norms.
pub(crate) fn qip_constant_from_norms(norms: &[f64], b: ArrayView1<f64>) -> Result<SmadCertificate> {
    if norms.is_empty() {
        return Err(BpgError::EmptyMeasurements);
    }
    if norms.len() != b.len() {
        return Err(BpgError::DimensionMismatch { expected: norms.len(), got: b.len() });
    }
    let l: f64 = norms.iter().zip(b.iter()).map(|(n, bi)| 3.0 * n * n + n * bi.abs()).sum();
    SmadCertificate::new(l, SmadSource::AnalyticQip)
}

/// Smooth adaptability constant of the quadratic inverse problem
/// `g(x) = 1/4 sum_i (x^T A_i x - b_i)^2` relative to the quartic kernel.
pub fn qip_smad_constant(matrices: &[Array2<f64>], b: ArrayView1<f64>) -> Result<SmadCertificate> {
    if matrices.is_empty() {
        return Err(BpgError::EmptyMeasurements);
    }
    let norms = matrices
        .iter()
        .enumerate()
        .map(|(index, a)| {
            if a.nrows() != a.ncols() {
                return Err(BpgError::NotSquare { rows: a.nrows(), cols: a.ncols() });
            }
            let asym = asymmetry(a.view());
            if asym > SYMMETRY_TOL {
                return Err(BpgError::NotSymmetric { index, asymmetry: asym });
            }
            spectral_norm(a.view())
        })
        .collect::<Result<Vec<_>>>()?;
    qip_constant_from_norms(&norms, b)
}

/// Outcome of a sampled check of `|D_g(x, y)| <= L D_h(x, y)`.
#[derive(Debug, Clone)]
pub struct DescentReport {
    /// `L D_h(x, y) - |D_g(x, y)|` per sampled pair.
    pub margins: Vec<f64>,
    /// Roundoff scale of each pair's terms; a margin counts as a violation
    /// only below `-DESCENT_SLACK * (1 + scale)`.
    pub scales: Vec<f64>,
    pub violations: usize,
    pub passed: bool,
}

impl DescentReport {
    pub fn worst_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_relative_margin(&self) -> f64 {
        self.margins
            .iter()
            .zip(&self.scales)
            .map(|(m, s)| m / (1.0 + s))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks the two-sided extended descent lemma on the given sample pairs.
///
/// A failed check is reported, not raised.
pub fn check_descent_lemma<V, G>(
    g_value: V,
    g_gradient: G,
    kernel: &Kernel,
    l: f64,
    samples: &[(Array1<f64>, Array1<f64>)],
) -> Result<DescentReport>
where
    V: Fn(ArrayView1<f64>) -> f64,
    G: Fn(ArrayView1<f64>) -> Array1<f64>,
{
    let mut margins = Vec::with_capacity(samples.len());
    let mut scales = Vec::with_capacity(samples.len());
    let mut violations = 0;
    for (x, y) in samples {
        let diff = x - y;
        let (gx, gy) = (g_value(x.view()), g_value(y.view()));
        let g_lin = g_gradient(y.view()).dot(&diff);
        let dg = gx - gy - g_lin;

        let (hx, hy) = (kernel.value(x.view())?, kernel.value(y.view())?);
        let h_lin = kernel.gradient(y.view())?.dot(&diff);
        let dh = hx - hy - h_lin;

        let margin = l * dh - dg.abs();
        let scale = gx.abs() + gy.abs() + g_lin.abs() + l * (hx.abs() + hy.abs() + h_lin.abs());
        if margin < -DESCENT_SLACK * (1.0 + scale) {
            violations += 1;
        }
        margins.push(margin);
        scales.push(scale);
    }
    Ok(DescentReport { margins, scales, violations, passed: violations == 0 })
}

/// Draws a point uniformly from the Euclidean ball of the given radius.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Array1<f64> {
    loop {
        let dir: Array1<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dir.dot(&dir).sqrt();
        if norm > 0.0 {
            let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
            return dir * (r / norm);
        }
    }
}

/// Independent uniform pairs from the ball of the given radius.
pub fn sample_ball_pairs<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    radius: f64,
    count: usize,
) -> Vec<(Array1<f64>, Array1<f64>)> {
    (0..count).map(|_| (sample_ball(rng, dim, radius), sample_ball(rng, dim, radius))).collect()
}
