//! Sparse quadratic inverse problems `min 1/4 sum_i (x^T A_i x - b_i)^2 + theta f(x)`
//! with `f` either the l1 norm or the indicator of the l0 ball `{||x||_0 <= s}`.
//!
//! Paired with the quartic kernel `h(x) = 1/4 ||x||^4 + 1/2 ||x||^2`, both
//! Bregman proximal maps are closed-form in terms of
//! `p = lambda grad g(x) - grad h(x)`:
//!
//! * l1: `x+ = -t* S_{lambda theta}(p)`, `t*` the positive root of `t^3 ||v||^2 + t - 1`;
//! * l0: `x+ = -eta* H_s(p) / ||H_s(p)||`, `eta*` the root of `eta^3 + eta - ||H_s(p)||`.
//!
//! The l0 map points along `-H_s(p)`: it minimizes `<p, u>` over a sphere
//! slice, and `<p, u>` is smallest opposite `p`.

use ndarray::{Array1, Array2, ArrayView1};

use crate::cubic::{cubic_root_l0, cubic_root_l1};
use crate::error::{BpgError, Result};
use crate::kernel::{Kernel, KernelKind};
use crate::linalg::{asymmetry, spectral_norm};
use crate::smad::{qip_constant_from_norms, SmadCertificate, SYMMETRY_TOL};
use crate::solver::Problem;

/// Measurement matrices, either dense symmetric or rank-one `A_i = a_i a_i^T`.
#[derive(Debug, Clone, PartialEq)]
pub enum Measurements {
    Dense(Vec<Array2<f64>>),
    RankOne(Vec<Array1<f64>>),
}

impl Measurements {
    pub fn len(&self) -> usize {
        match self {
            Measurements::Dense(m) => m.len(),
            Measurements::RankOne(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    L1 { theta: f64 },
    L0Ball { s: usize },
}

impl Regularizer {
    fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            Regularizer::L1 { theta } if !(theta.is_finite() && theta > 0.0) => {
                Err(BpgError::InvalidParameter(format!("l1 weight must be positive, got {theta}")))
            }
            Regularizer::L0Ball { s } if s == 0 || s >= dim => Err(BpgError::SparsityOutOfRange { s, d: dim }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QipInstance {
    dim: usize,
    measurements: Measurements,
    b: Array1<f64>,
    regularizer: Regularizer,
    norms: Vec<f64>,
}

impl QipInstance {
    pub fn dense(matrices: Vec<Array2<f64>>, b: Array1<f64>, regularizer: Regularizer) -> Result<Self> {
        let dim = matrices.first().ok_or(BpgError::EmptyMeasurements)?.nrows();
        for (index, a) in matrices.iter().enumerate() {
            if a.nrows() != a.ncols() {
                return Err(BpgError::NotSquare { rows: a.nrows(), cols: a.ncols() });
            }
            if a.nrows() != dim {
                return Err(BpgError::DimensionMismatch { expected: dim, got: a.nrows() });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(BpgError::NonFinite("measurement matrix"));
            }
            let asym = asymmetry(a.view());
            if asym > SYMMETRY_TOL {
                return Err(BpgError::NotSymmetric { index, asymmetry: asym });
            }
        }
        let norms = matrices.iter().map(|a| spectral_norm(a.view())).collect::<Result<Vec<_>>>()?;
        Self::finish(dim, Measurements::Dense(matrices), b, regularizer, norms)
    }

    pub fn rank_one(factors: Vec<Array1<f64>>, b: Array1<f64>, regularizer: Regularizer) -> Result<Self> {
        let dim = factors.first().ok_or(BpgError::EmptyMeasurements)?.len();
        for a in &factors {
            if a.len() != dim {
                return Err(BpgError::DimensionMismatch { expected: dim, got: a.len() });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(BpgError::NonFinite("measurement factor"));
            }
        }
        // ||a a^T|| = ||a||^2
        let norms = factors.iter().map(|a| a.dot(a)).collect();
        Self::finish(dim, Measurements::RankOne(factors), b, regularizer, norms)
    }

    fn finish(
        dim: usize,
        measurements: Measurements,
        b: Array1<f64>,
        regularizer: Regularizer,
        norms: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(BpgError::InvalidParameter("dimension must be positive".into()));
        }
        if b.len() != measurements.len() {
            return Err(BpgError::DimensionMismatch { expected: measurements.len(), got: b.len() });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(BpgError::NonFinite("measurements b"));
        }
        regularizer.validate(dim)?;
        Ok(QipInstance { dim, measurements, b, regularizer, norms })
    }

    pub fn with_regularizer(mut self, regularizer: Regularizer) -> Result<Self> {
        regularizer.validate(self.dim)?;
        self.regularizer = regularizer;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_measurements(&self) -> usize {
        self.b.len()
    }

    pub fn measurements(&self) -> &Measurements {
        &self.measurements
    }

    pub fn b(&self) -> ArrayView1<'_, f64> {
        self.b.view()
    }

    pub fn regularizer(&self) -> Regularizer {
        self.regularizer
    }

    pub fn spectral_norms(&self) -> &[f64] {
        &self.norms
    }

    /// `L = sum_i (3 ||A_i||^2 + ||A_i|| |b_i|)`.
    ///
    /// Fails when every matrix is zero, since the constant must be positive.
    pub fn smad_certificate(&self) -> Result<SmadCertificate> {
        qip_constant_from_norms(&self.norms, self.b.view())
    }

    fn check(&self, x: ArrayView1<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(BpgError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// `x^T A_i x`.
    pub fn quadratic_form(&self, i: usize, x: ArrayView1<f64>) -> f64 {
        match &self.measurements {
            Measurements::Dense(m) => x.dot(&m[i].dot(&x)),
            Measurements::RankOne(m) => {
                let ax = m[i].dot(&x);
                ax * ax
            }
        }
    }

    pub(crate) fn value_unchecked(&self, x: ArrayView1<f64>) -> f64 {
        let sum: f64 = (0..self.num_measurements())
            .map(|i| {
                let r = self.quadratic_form(i, x) - self.b[i];
                r * r
            })
            .sum();
        0.25 * sum
    }

    pub(crate) fn gradient_unchecked(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mut grad = Array1::zeros(self.dim);
        match &self.measurements {
            Measurements::Dense(m) => {
                for (a, bi) in m.iter().zip(self.b.iter()) {
                    let ax = a.dot(&x);
                    let r = x.dot(&ax) - bi;
                    grad.scaled_add(r, &ax);
                }
            }
            Measurements::RankOne(m) => {
                for (a, bi) in m.iter().zip(self.b.iter()) {
                    let ax = a.dot(&x);
                    let r = ax * ax - bi;
                    grad.scaled_add(r * ax, a);
                }
            }
        }
        grad
    }

    /// Smooth part `g(x) = 1/4 sum_i (x^T A_i x - b_i)^2`.
    pub fn value(&self, x: ArrayView1<f64>) -> Result<f64> {
        self.check(x)?;
        Ok(self.value_unchecked(x))
    }

    /// `grad g(x) = sum_i (x^T A_i x - b_i) A_i x`.
    pub fn gradient(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check(x)?;
        Ok(self.gradient_unchecked(x))
    }

    /// `theta ||x||_1`, or the l0-ball indicator (`0` or `+inf`).
    pub fn regularizer_value(&self, x: ArrayView1<f64>) -> f64 {
        match self.regularizer {
            Regularizer::L1 { theta } => theta * x.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::L0Ball { s } => {
                if x.iter().filter(|v| **v != 0.0).count() <= s {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn objective(&self, x: ArrayView1<f64>) -> Result<f64> {
        let f = self.regularizer_value(x);
        Ok(if f.is_infinite() { f } else { f + self.value(x)? })
    }
}

/// `p_lambda(x) = lambda grad g(x) - grad h(x)`.
pub fn p_lambda(inst: &QipInstance, kernel: &Kernel, lambda: f64, x: ArrayView1<f64>) -> Result<Array1<f64>> {
    let grad_g = inst.gradient(x)?;
    let grad_h = kernel.gradient(x)?;
    Ok(grad_g * lambda - grad_h)
}

/// Componentwise `max(|y| - tau, 0) sgn(y)`.
pub fn soft_threshold(y: ArrayView1<f64>, tau: f64) -> Array1<f64> {
    debug_assert!(tau >= 0.0, "negative threshold {tau}");
    y.mapv(|v| (v.abs() - tau).max(0.0) * v.signum())
}

/// Indices of the `s` largest-magnitude entries; ties go to the lower index.
fn top_indices(y: ArrayView1<f64>, s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&i, &j| y[j].abs().total_cmp(&y[i].abs()).then(i.cmp(&j)));
    idx.truncate(s);
    idx
}

/// Keeps the `s` entries of largest magnitude and zeroes the rest.
///
/// Ties are broken in favor of the lowest index.
pub fn hard_threshold(y: ArrayView1<f64>, s: usize) -> Result<Array1<f64>> {
    if s == 0 || s > y.len() {
        return Err(BpgError::SparsityOutOfRange { s, d: y.len() });
    }
    let mut out = Array1::zeros(y.len());
    for i in top_indices(y, s) {
        out[i] = y[i];
    }
    Ok(out)
}

/// `max { <a, z> : ||z|| = 1, ||z||_0 <= s }` and its maximizer `H_s(a) / ||H_s(a)||`.
pub fn truncation_max(a: ArrayView1<f64>, s: usize) -> Result<(f64, Array1<f64>)> {
    if s == 0 || s >= a.len() {
        return Err(BpgError::SparsityOutOfRange { s, d: a.len() });
    }
    if a.iter().all(|v| *v == 0.0) {
        return Err(BpgError::ZeroVector);
    }
    let h = hard_threshold(a, s)?;
    let norm = h.dot(&h).sqrt();
    Ok((norm, h / norm))
}

/// Bregman proximal map of `lambda_theta ||.||_1` under the quartic kernel,
/// as a function of `p = p_lambda(x)`. This is the unique minimizer of
/// `lambda_theta ||u||_1 + <p, u> + 1/4 ||u||^4 + 1/2 ||u||^2`.
pub fn prox_l1(p: ArrayView1<f64>, lambda_theta: f64) -> Array1<f64> {
    let v = soft_threshold(p, lambda_theta);
    let t = cubic_root_l1(v.dot(&v)).unwrap_or(f64::NAN);
    v * (-t)
}

/// Bregman proximal map of the l0-ball indicator under the quartic kernel:
/// a global minimizer of `<p, u> + 1/4 ||u||^4 + 1/2 ||u||^2` over `||u||_0 <= s`.
///
/// When several supports attain the maximum of `||H_s(p)||` the one chosen
/// by [`hard_threshold`] (lowest indices) is returned.
pub fn prox_l0(p: ArrayView1<f64>, s: usize) -> Result<Array1<f64>> {
    if s == 0 || s >= p.len() {
        return Err(BpgError::SparsityOutOfRange { s, d: p.len() });
    }
    let q = hard_threshold(p, s)?;
    let norm = q.dot(&q).sqrt();
    if norm == 0.0 {
        return Ok(Array1::zeros(p.len()));
    }
    let eta = cubic_root_l0(norm).unwrap_or(f64::NAN);
    Ok(q * (-eta / norm))
}

/// A quadratic inverse problem bound to a kernel, ready for the solver.
#[derive(Debug, Clone)]
pub struct QipProblem {
    instance: QipInstance,
    kernel: Kernel,
    smad: SmadCertificate,
    certified: bool,
}

impl QipProblem {
    pub fn instance(&self) -> &QipInstance {
        &self.instance
    }

    /// False when the pairing relies on a user-supplied constant that has not
    /// been proven valid (the energy kernel).
    pub fn is_certified(&self) -> bool {
        self.certified
    }
}

/// Binds an instance to a kernel.
///
/// The quartic kernel is the certified pairing and takes its constant from
/// [`QipInstance::smad_certificate`] unless `smad_override` is given. The
/// energy kernel has no valid global constant for this `g`; it is accepted
/// only with an explicit override and the result is flagged uncertified.
pub fn make_problem(inst: QipInstance, kernel: Kernel, smad_override: Option<f64>) -> Result<QipProblem> {
    if kernel.dim() != inst.dim() {
        return Err(BpgError::DimensionMismatch { expected: inst.dim(), got: kernel.dim() });
    }
    let (smad, certified) = match (kernel.kind(), smad_override) {
        (KernelKind::QuarticPlusQuadratic, None) => (inst.smad_certificate()?, true),
        (KernelKind::QuarticPlusQuadratic, Some(l)) => (SmadCertificate::user(l)?, true),
        (KernelKind::Energy, None) => return Err(BpgError::UncertifiedPairing),
        (KernelKind::Energy, Some(l)) => (SmadCertificate::user(l)?, false),
    };
    Ok(QipProblem { instance: inst, kernel, smad, certified })
}

impl Problem for QipProblem {
    fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    fn smad(&self) -> SmadCertificate {
        self.smad
    }

    fn smooth_value(&self, x: ArrayView1<f64>) -> f64 {
        self.instance.value_unchecked(x)
    }

    fn smooth_gradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.instance.gradient_unchecked(x)
    }

    fn nonsmooth_value(&self, x: ArrayView1<f64>) -> f64 {
        self.instance.regularizer_value(x)
    }

    fn prox_map(&self, x: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
        let grad_g = self.instance.gradient_unchecked(x);
        let nan = || Array1::from_elem(x.len(), f64::NAN);
        match self.kernel.kind() {
            KernelKind::QuarticPlusQuadratic => {
                let p = grad_g * lambda - (x.dot(&x) + 1.0) * &x;
                match self.instance.regularizer {
                    Regularizer::L1 { theta } => prox_l1(p.view(), lambda * theta),
                    Regularizer::L0Ball { s } => prox_l0(p.view(), s).unwrap_or_else(|_| nan()),
                }
            }
            KernelKind::Energy => {
                let y = &x - &(grad_g * lambda);
                match self.instance.regularizer {
                    Regularizer::L1 { theta } => soft_threshold(y.view(), lambda * theta),
                    Regularizer::L0Ball { s } => hard_threshold(y.view(), s).unwrap_or_else(|_| nan()),
                }
            }
        }
    }

    fn psi_lower_bound(&self) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn identity_instance(b: f64) -> QipInstance {
        QipInstance::dense(vec![Array2::eye(2)], array![b], Regularizer::L1 { theta: 0.1 }).unwrap()
    }

    #[test]
    fn values() {
        assert_eq!(identity_instance(1.0).value(array![1.0, 0.0].view()).unwrap(), 0.0);
        assert_eq!(identity_instance(0.0).value(array![1.0, 1.0].view()).unwrap(), 1.0);
    }

    #[test]
    fn gradients() {
        let inst = identity_instance(0.0);
        assert_eq!(inst.gradient(array![0.0, 0.0].view()).unwrap(), array![0.0, 0.0]);
        assert_eq!(inst.gradient(array![1.0, 0.0].view()).unwrap(), array![1.0, 0.0]);
    }

    #[test]
    fn p_lambda_examples() {
        let inst = identity_instance(0.0);
        let h = Kernel::quartic(2).unwrap();
        assert_eq!(p_lambda(&inst, &h, 0.3, array![0.0, 0.0].view()).unwrap(), array![0.0, 0.0]);
        assert_eq!(p_lambda(&inst, &h, 1.0, array![1.0, 0.0].view()).unwrap(), array![-1.0, 0.0]);
    }

    #[test]
    fn rank_one_matches_dense() {
        let a = array![1.0, -2.0, 0.5];
        let dense = Array2::from_shape_fn((3, 3), |(i, j)| a[i] * a[j]);
        let reg = Regularizer::L0Ball { s: 2 };
        let r1 = QipInstance::rank_one(vec![a.clone()], array![0.7], reg).unwrap();
        let dn = QipInstance::dense(vec![dense], array![0.7], reg).unwrap();
        let x = array![0.3, 0.1, -1.2];
        assert!((r1.value(x.view()).unwrap() - dn.value(x.view()).unwrap()).abs() < 1e-14);
        let (g1, g2) = (r1.gradient(x.view()).unwrap(), dn.gradient(x.view()).unwrap());
        for (u, v) in g1.iter().zip(g2.iter()) {
            assert!((u - v).abs() < 1e-13);
        }
        assert!((r1.smad_certificate().unwrap().constant() - dn.smad_certificate().unwrap().constant()).abs() < 1e-9);
    }

    #[test]
    fn instance_validation() {
        let reg = Regularizer::L1 { theta: 1.0 };
        assert_eq!(QipInstance::dense(vec![], array![], reg), Err(BpgError::EmptyMeasurements));
        assert!(matches!(
            QipInstance::dense(vec![array![[1.0, 0.5], [0.0, 1.0]]], array![1.0], reg),
            Err(BpgError::NotSymmetric { .. })
        ));
        assert!(QipInstance::dense(vec![Array2::eye(2)], array![1.0, 2.0], reg).is_err());
        assert!(QipInstance::dense(vec![Array2::eye(2), Array2::eye(3)], array![1.0, 2.0], reg).is_err());
        assert!(matches!(
            QipInstance::dense(vec![Array2::eye(2)], array![1.0], Regularizer::L0Ball { s: 2 }),
            Err(BpgError::SparsityOutOfRange { s: 2, d: 2 })
        ));
        assert!(QipInstance::dense(vec![Array2::eye(2)], array![1.0], Regularizer::L0Ball { s: 0 }).is_err());
        assert!(QipInstance::dense(vec![Array2::eye(2)], array![1.0], Regularizer::L1 { theta: 0.0 }).is_err());
        assert!(identity_instance(1.0).value(array![1.0].view()).is_err());
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(array![2.0, -1.0, 0.5].view(), 1.5), array![0.5, 0.0, 0.0]);
        let y = array![2.0, -1.0, 0.5];
        assert_eq!(soft_threshold(y.view(), 0.0), y);
    }

    #[test]
    fn hard_threshold_examples() {
        assert_eq!(hard_threshold(array![3.0, -1.0, 2.0, 0.5].view(), 2).unwrap(), array![3.0, 0.0, 2.0, 0.0]);
        let y = array![3.0, -1.0, 2.0, 0.5];
        assert_eq!(hard_threshold(y.view(), 4).unwrap(), y);
        assert_eq!(hard_threshold(array![1.0, -1.0, 1.0].view(), 2).unwrap(), array![1.0, -1.0, 0.0]);
        assert!(hard_threshold(y.view(), 0).is_err());
        assert!(hard_threshold(y.view(), 5).is_err());
    }

    #[test]
    fn prox_l1_examples() {
        assert_eq!(prox_l1(array![0.3, -0.2].view(), 0.5), array![0.0, 0.0]);
        let x = prox_l1(array![-2.0, 0.0].view(), 0.0);
        assert!((x[0] - 1.0).abs() < 1e-15 && x[1] == 0.0);
    }

    #[test]
    fn prox_l0_examples() {
        assert_eq!(prox_l0(array![0.0, 0.0, 0.0].view(), 1).unwrap(), array![0.0, 0.0, 0.0]);
        let x = prox_l0(array![0.0, -2.0, 0.0].view(), 1).unwrap();
        assert!((x[1] - 1.0).abs() < 1e-15 && x[0] == 0.0 && x[2] == 0.0);
        let objective = |u: &Array1<f64>| {
            let sq = u.dot(u);
            array![0.0, -2.0, 0.0].dot(u) + 0.25 * sq * sq + 0.5 * sq
        };
        assert!((objective(&x) + 1.25).abs() < 1e-14);
        assert!((objective(&array![0.0, -1.0, 0.0]) - 2.75).abs() < 1e-14);
        assert!(prox_l0(array![1.0, 2.0].view(), 2).is_err());
    }

    #[test]
    fn truncation_examples() {
        let (v, z) = truncation_max(array![3.0, 0.0, 4.0].view(), 1).unwrap();
        assert_eq!(v, 4.0);
        assert_eq!(z, array![0.0, 0.0, 1.0]);
        let (v, z) = truncation_max(array![1.0, 1.0].view(), 1).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(z, array![1.0, 0.0]);
        assert_eq!(truncation_max(array![0.0, 0.0].view(), 1), Err(BpgError::ZeroVector));
    }

    #[test]
    fn make_problem_pairings() {
        let inst = identity_instance(1.0);
        assert!(make_problem(inst.clone(), Kernel::quartic(2).unwrap(), None).unwrap().is_certified());
        assert_eq!(
            make_problem(inst.clone(), Kernel::energy(2).unwrap(), None).unwrap_err(),
            BpgError::UncertifiedPairing
        );
        let p = make_problem(inst.clone(), Kernel::energy(2).unwrap(), Some(10.0)).unwrap();
        assert!(!p.is_certified());
        assert!(make_problem(inst, Kernel::quartic(3).unwrap(), None).is_err());
    }

    #[test]
    fn l0_infeasible_is_infinite() {
        let inst = QipInstance::dense(vec![Array2::eye(3)], array![1.0], Regularizer::L0Ball { s: 1 }).unwrap();
        assert_eq!(inst.regularizer_value(array![1.0, 1.0, 0.0].view()), f64::INFINITY);
        assert_eq!(inst.regularizer_value(array![0.0, 1.0, 0.0].view()), 0.0);
    }
}
