use bpg::{Kernel, KernelKind};
use bpg_testkit::{fd_gradient, normal_vec, rel_error};
use ndarray::Array1;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn point(dim: usize) -> impl Strategy<Value = Array1<f64>> {
    proptest::collection::vec(-3.0f64..3.0, dim).prop_map(Array1::from)
}

fn triple(max_dim: usize) -> impl Strategy<Value = (Array1<f64>, Array1<f64>, Array1<f64>)> {
    (1..=max_dim).prop_flat_map(|d| (point(d), point(d), point(d)))
}

fn kernels(dim: usize) -> [Kernel; 2] {
    [Kernel::energy(dim).unwrap(), Kernel::quartic(dim).unwrap()]
}

#[test]
fn quartic_gradient_matches_finite_differences() {
    let h = Kernel::quartic(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let x = normal_vec(&mut rng, 5);
        let fd = fd_gradient(|y| h.value(y.view()).unwrap(), &x, 1e-6);
        let g = h.gradient(x.view()).unwrap();
        assert!(rel_error(&g, &fd, 1.0) <= 1e-6);
    }
}

proptest! {
    #[test]
    fn three_point_identity((x, y, z) in triple(10)) {
        for h in kernels(x.len()) {
            let lhs = h.bregman_distance(x.view(), z.view()).unwrap()
                - h.bregman_distance(x.view(), y.view()).unwrap()
                - h.bregman_distance(y.view(), z.view()).unwrap();
            let rhs = (h.gradient(y.view()).unwrap() - h.gradient(z.view()).unwrap()).dot(&(&x - &y));
            let scale = 1.0 + h.value(x.view()).unwrap() + h.value(y.view()).unwrap() + h.value(z.view()).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale, "{:?}: {lhs} vs {rhs}", h.kind());
        }
    }

    #[test]
    fn linear_additivity((x, y, _z) in triple(10), alpha in 0.0f64..5.0, beta in 0.0f64..5.0) {
        let [e, q] = kernels(x.len());
        // alpha * E + beta * Q evaluated directly from its value and gradient.
        let value = |u: &Array1<f64>| alpha * e.value(u.view()).unwrap() + beta * q.value(u.view()).unwrap();
        let grad = |u: &Array1<f64>| e.gradient(u.view()).unwrap() * alpha + q.gradient(u.view()).unwrap() * beta;
        let combined = value(&x) - value(&y) - grad(&y).dot(&(&x - &y));
        let split = alpha * e.bregman_distance(x.view(), y.view()).unwrap()
            + beta * q.bregman_distance(x.view(), y.view()).unwrap();
        prop_assert!((combined - split).abs() <= 1e-10 * (1.0 + value(&x) + value(&y)));
    }

    #[test]
    fn strongly_convex_and_nonnegative((x, y, _z) in triple(10)) {
        let diff = &x - &y;
        let half_sq = 0.5 * diff.dot(&diff);
        for h in kernels(x.len()) {
            let d = h.bregman_distance(x.view(), y.view()).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!(d >= half_sq - 1e-10 * (1.0 + d));
            prop_assert_eq!(h.bregman_distance(x.view(), x.view()).unwrap(), 0.0);
            if h.kind() == KernelKind::QuarticPlusQuadratic && half_sq > 1e-6 {
                prop_assert!(d > 0.0);
            }
        }
    }
}
