//! Kernel generating distances and their Bregman distances.
//!
//! Both shipped kernels are defined on all of R^d and are 1-strongly convex,
//! so `D_h(x, y) >= 0.5 * ||x - y||^2` for every pair.

use ndarray::{Array1, ArrayView1};

use crate::cubic::cubic_root_l0;
use crate::error::{BpgError, Result};

/// Which kernel function generates the distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `h(x) = 0.5 ||x||^2`, recovering the classical proximal gradient method.
    Energy,
    /// `h(x) = 0.25 ||x||^4 + 0.5 ||x||^2`.
    QuarticPlusQuadratic,
}

/// A kernel generating distance on R^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kernel {
    kind: KernelKind,
    dim: usize,
}

impl Kernel {
    pub fn new(kind: KernelKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(BpgError::InvalidParameter("kernel dimension must be positive".into()));
        }
        Ok(Kernel { kind, dim })
    }

    pub fn energy(dim: usize) -> Result<Self> {
        Self::new(KernelKind::Energy, dim)
    }

    pub fn quartic(dim: usize) -> Result<Self> {
        Self::new(KernelKind::QuarticPlusQuadratic, dim)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Strong convexity modulus with respect to the Euclidean norm.
    pub fn strong_convexity(&self) -> f64 {
        1.0
    }

    fn check(&self, x: ArrayView1<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(BpgError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    pub fn value(&self, x: ArrayView1<f64>) -> Result<f64> {
        self.check(x)?;
        let sq = x.dot(&x);
        Ok(match self.kind {
            KernelKind::Energy => 0.5 * sq,
            KernelKind::QuarticPlusQuadratic => 0.25 * sq * sq + 0.5 * sq,
        })
    }

    pub fn gradient(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check(x)?;
        Ok(match self.kind {
            KernelKind::Energy => x.to_owned(),
            KernelKind::QuarticPlusQuadratic => {
                let scale = x.dot(&x) + 1.0;
                x.mapv(|xi| scale * xi)
            }
        })
    }

    /// Bregman distance `h(x) - h(y) - <grad h(y), x - y>`, evaluated from the
    /// definition rather than a per-kernel simplification.
    pub fn bregman_distance(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
        let hx = self.value(x)?;
        let hy = self.value(y)?;
        let gy = self.gradient(y)?;
        let lin: f64 = gy.iter().zip(x.iter().zip(y.iter())).map(|(g, (a, b))| g * (a - b)).sum();
        // Roundoff can push an exact zero slightly negative.
        Ok((hx - hy - lin).max(0.0))
    }

    /// Solves `grad h(u) = y` for `u`. The gradient map is a bijection of R^d
    /// for both kernels.
    pub fn gradient_inverse(&self, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check(y)?;
        match self.kind {
            KernelKind::Energy => Ok(y.to_owned()),
            KernelKind::QuarticPlusQuadratic => {
                // (||u||^2 + 1) u = y, so u = eta * y / ||y|| with eta^3 + eta = ||y||.
                let norm = y.dot(&y).sqrt();
                if norm == 0.0 {
                    return Ok(Array1::zeros(self.dim));
                }
                let eta = cubic_root_l0(norm)?;
                Ok(y.mapv(|yi| eta * yi / norm))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn values() {
        let e = Kernel::energy(2).unwrap();
        let q = Kernel::quartic(2).unwrap();
        assert_eq!(e.value(array![3.0, 4.0].view()).unwrap(), 12.5);
        assert_eq!(q.value(array![0.0, 0.0].view()).unwrap(), 0.0);
        assert_eq!(q.value(array![1.0, 0.0].view()).unwrap(), 0.75);
    }

    #[test]
    fn gradients() {
        let e = Kernel::energy(2).unwrap();
        let q = Kernel::quartic(2).unwrap();
        assert_eq!(e.gradient(array![1.0, -2.0].view()).unwrap(), array![1.0, -2.0]);
        assert_eq!(q.gradient(array![1.0, 0.0].view()).unwrap(), array![2.0, 0.0]);
    }

    #[test]
    fn distances() {
        let q = Kernel::quartic(2).unwrap();
        let x = array![0.3, -1.2];
        assert_eq!(q.bregman_distance(x.view(), x.view()).unwrap(), 0.0);
        let d = q.bregman_distance(array![1.0, 0.0].view(), array![0.0, 0.0].view()).unwrap();
        assert_eq!(d, 0.75);

        let e = Kernel::energy(3).unwrap();
        let a = array![1.0, 2.0, -0.5];
        let b = array![-0.25, 0.5, 3.0];
        let diff = &a - &b;
        assert_relative_eq!(
            e.bregman_distance(a.view(), b.view()).unwrap(),
            0.5 * diff.dot(&diff),
            max_relative = 1e-14
        );
    }

    #[test]
    fn dimension_mismatch() {
        let q = Kernel::quartic(3).unwrap();
        assert_eq!(
            q.value(array![1.0].view()),
            Err(BpgError::DimensionMismatch { expected: 3, got: 1 })
        );
        assert!(q.gradient(array![1.0, 2.0].view()).is_err());
        assert!(q.bregman_distance(array![1.0, 2.0, 3.0].view(), array![1.0].view()).is_err());
        assert!(Kernel::energy(0).is_err());
    }

    #[test]
    fn gradient_inverse_roundtrip() {
        let q = Kernel::quartic(3).unwrap();
        let u = array![0.7, -2.0, 1.5];
        let y = q.gradient(u.view()).unwrap();
        let back = q.gradient_inverse(y.view()).unwrap();
        for (a, b) in back.iter().zip(u.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        assert_eq!(q.gradient_inverse(array![0.0, 0.0, 0.0].view()).unwrap(), array![0.0, 0.0, 0.0]);
    }
}
