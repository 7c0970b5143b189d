use bpg::{
    hard_threshold, p_lambda, prox_l0, prox_l1, soft_threshold, truncation_max, Kernel, Regularizer,
};
use bpg_testkit::{
    fd_gradient, l0_prox_objective, l1_prox_objective, normal_vec, prox_l0_oracle, prox_l1_oracle,
    qip_value_naive, random_dense_instance, rel_error, soft_threshold_oracle, truncation_oracle,
};
use ndarray::Array1;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REG: Regularizer = Regularizer::L1 { theta: 0.5 };

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn value_matches_naive_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let (mats, inst) = random_dense_instance(&mut rng, 4, 6, REG);
        let x = normal_vec(&mut rng, 4);
        let ours = inst.value(x.view()).unwrap();
        let naive = qip_value_naive(&mats, inst.b().as_slice().unwrap(), x.as_slice().unwrap());
        assert!((ours - naive).abs() <= 1e-12 * naive.max(1e-300), "{ours} vs {naive}");
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (_, inst) = random_dense_instance(&mut rng, 5, 8, REG);
        let x = normal_vec(&mut rng, 5);
        let fd = fd_gradient(|y| inst.value(y.view()).unwrap(), &x, 1e-6);
        let g = inst.gradient(x.view()).unwrap();
        let err = rel_error(&g, &fd, 1.0);
        assert!(err <= 1e-6, "relative error {err}");
    }
}

#[test]
fn p_lambda_is_the_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (_, inst) = random_dense_instance(&mut rng, 4, 5, REG);
    let h = Kernel::quartic(4).unwrap();
    for _ in 0..20 {
        let x = normal_vec(&mut rng, 4);
        let lambda = rng.random_range(1e-3..1.0);
        let p = p_lambda(&inst, &h, lambda, x.view()).unwrap();
        let want = inst.gradient(x.view()).unwrap() * lambda - h.gradient(x.view()).unwrap();
        assert!(max_abs_diff(p.as_slice().unwrap(), want.as_slice().unwrap()) <= 1e-14 * (1.0 + want.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
    }
}

#[test]
fn soft_threshold_matches_scalar_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let y = normal_vec(&mut rng, 4) * 2.0;
        let tau = rng.random_range(0.0..2.0);
        let ours = soft_threshold(y.view(), tau);
        let oracle = soft_threshold_oracle(y.as_slice().unwrap(), tau);
        assert!(max_abs_diff(ours.as_slice().unwrap(), &oracle) <= 1e-4);
    }
}

#[test]
fn prox_l1_matches_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for trial in 0..40 {
        let d = if trial % 2 == 0 { 2 } else { 3 };
        let p = normal_vec(&mut rng, d) * 2.0;
        let lt = rng.random_range(0.0..1.5);
        let ours = prox_l1(p.view(), lt);
        let (oracle, oracle_val) = prox_l1_oracle(p.as_slice().unwrap(), lt);
        let ours_val = l1_prox_objective(p.as_slice().unwrap(), lt, ours.as_slice().unwrap());
        assert!(max_abs_diff(ours.as_slice().unwrap(), &oracle) <= 1e-3, "p={p} ours={ours} oracle={oracle:?}");
        assert!(ours_val <= oracle_val + 1e-6);
        assert!((ours_val - oracle_val).abs() <= 1e-6);
    }
}

#[test]
fn prox_l0_matches_support_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for trial in 0..40 {
        let s = 1 + trial % 2;
        let p = normal_vec(&mut rng, 3) * 2.0;
        let ours = prox_l0(p.view(), s).unwrap();
        let (oracle, oracle_val) = prox_l0_oracle(p.as_slice().unwrap(), s);
        let ours_val = l0_prox_objective(p.as_slice().unwrap(), ours.as_slice().unwrap());
        assert!(max_abs_diff(ours.as_slice().unwrap(), &oracle) <= 1e-3, "p={p} ours={ours} oracle={oracle:?}");
        assert!((ours_val - oracle_val).abs() <= 1e-6);
    }
}

#[test]
fn truncation_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..50 {
        let a = normal_vec(&mut rng, 4);
        let (value, z) = truncation_max(a.view(), 2).unwrap();
        let oracle = truncation_oracle(a.as_slice().unwrap(), 2);
        assert!((value - oracle).abs() <= 1e-12 * oracle);
        assert!((z.dot(&z) - 1.0).abs() < 1e-12);
        assert!((a.dot(&z) - value).abs() <= 1e-12 * value);
        assert!(z.iter().filter(|v| **v != 0.0).count() <= 2);
    }
}

fn vec_strategy(d: usize) -> impl Strategy<Value = Array1<f64>> {
    proptest::collection::vec(-5.0f64..5.0, d).prop_map(Array1::from)
}

proptest! {
    #[test]
    fn l1_first_order_certificate(p in (2usize..8).prop_flat_map(vec_strategy), lt in 0.0f64..3.0) {
        let x = prox_l1(p.view(), lt);
        let scale = 1.0 + x.dot(&x);
        for i in 0..p.len() {
            // x_i (1 + ||x||^2) + p_i + lt * gamma_i = 0
            let base = x[i] * scale + p[i];
            if x[i] != 0.0 {
                prop_assert!((base + lt * x[i].signum()).abs() <= 1e-9 * (1.0 + p[i].abs()));
            } else {
                prop_assert!(base.abs() <= lt + 1e-9);
            }
        }
    }

    #[test]
    fn prox_maps_are_odd(p in (2usize..8).prop_flat_map(vec_strategy), lt in 0.0f64..3.0) {
        let neg = -&p;
        prop_assert_eq!(prox_l1(neg.view(), lt), -prox_l1(p.view(), lt));
        let s = 1 + (p.len() - 1) / 2;
        prop_assert_eq!(prox_l0(neg.view(), s).unwrap(), -prox_l0(p.view(), s).unwrap());
    }

    #[test]
    fn l0_sparsity_and_support(p in (2usize..8).prop_flat_map(vec_strategy), frac in 0.0f64..1.0) {
        let d = p.len();
        let s = 1 + ((d - 2) as f64 * frac) as usize;
        let x = prox_l0(p.view(), s).unwrap();
        prop_assert!(x.iter().filter(|v| **v != 0.0).count() <= s);
        let h = hard_threshold(p.view(), s).unwrap();
        if h.dot(&h) > 0.0 {
            for i in 0..d {
                prop_assert_eq!(x[i] != 0.0, h[i] != 0.0);
            }
        }
    }
}
