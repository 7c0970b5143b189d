use bpg::smad::sample_ball_pairs;
use bpg::{check_descent_lemma, qip_smad_constant, spectral_norm, Regularizer};
use bpg_testkit::{normal_vec, random_dense_instance, random_symmetric, spectral_norm_oracle};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REG: Regularizer = Regularizer::L1 { theta: 0.1 };

#[test]
fn spectral_norm_matches_eigendecomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let a = random_symmetric(&mut rng, 6);
        let ours = spectral_norm(a.view()).unwrap();
        let oracle = spectral_norm_oracle(&a);
        assert!((ours - oracle).abs() <= 1e-8 * oracle, "{ours} vs {oracle}");
    }
}

#[test]
fn spectral_norm_clustered_spectrum() {
    // Top magnitudes 5 and -4.9999 defeat 500 power iterations; the fallback must still be exact.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = random_symmetric(&mut rng, 5);
    let d = Array2::from_diag(&Array1::from(vec![5.0, -4.9999, 1.0, 0.5, -2.0]));
    // Orthogonal basis from Gram-Schmidt on a random matrix.
    let mut basis: Vec<Array1<f64>> = Vec::new();
    for i in 0..5 {
        let mut v = q.column(i).to_owned() + Array1::from_elem(5, i as f64 * 0.1);
        for u in &basis {
            let c = v.dot(u);
            v = v - u * c;
        }
        let n = v.dot(&v).sqrt();
        basis.push(v / n);
    }
    let o = Array2::from_shape_fn((5, 5), |(i, j)| basis[j][i]);
    let a = o.dot(&d).dot(&o.t());
    let a = Array2::from_shape_fn((5, 5), |(i, j)| 0.5 * (a[[i, j]] + a[[j, i]]));
    let ours = spectral_norm(a.view()).unwrap();
    assert!((ours - spectral_norm_oracle(&a)).abs() <= 1e-10 * 5.0);
}

#[test]
fn qip_constant_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let mats: Vec<Array2<f64>> = (0..3).map(|_| random_symmetric(&mut rng, 4)).collect();
        let b = normal_vec(&mut rng, 3);
        let oracle: f64 = mats
            .iter()
            .zip(b.iter())
            .map(|(a, bi)| {
                let n = spectral_norm_oracle(a);
                3.0 * n * n + n * bi.abs()
            })
            .sum();
        let l = qip_smad_constant(&mats, b.view()).unwrap().constant();
        assert!((l - oracle).abs() <= 1e-8 * oracle);
    }
}

#[test]
fn scale_covariance_and_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mats: Vec<Array2<f64>> = (0..4).map(|_| random_symmetric(&mut rng, 5)).collect();
    let b = normal_vec(&mut rng, 4);
    let norms: Vec<f64> = mats.iter().map(spectral_norm_oracle).collect();
    for c in [0.1, 2.0, 7.5] {
        let scaled: Vec<Array2<f64>> = mats.iter().map(|a| a * c).collect();
        let want: f64 = norms.iter().zip(b.iter()).map(|(n, bi)| 3.0 * c * c * n * n + c * n * bi.abs()).sum();
        let l = qip_smad_constant(&scaled, b.view()).unwrap().constant();
        assert!((l - want).abs() <= 1e-10 * want, "{l} vs {want}");
    }
    let base = qip_smad_constant(&mats, b.view()).unwrap().constant();
    let mut more = mats.clone();
    more.push(random_symmetric(&mut rng, 5));
    let mut b_more = b.to_vec();
    b_more.push(rng.random_range(-3.0..3.0));
    let extended = qip_smad_constant(&more, Array1::from(b_more).view()).unwrap().constant();
    assert!(extended >= base);
}

#[test]
fn descent_lemma_holds_with_analytic_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (_, inst) = random_dense_instance(&mut rng, 6, 8, REG);
    let kernel = bpg::Kernel::quartic(6).unwrap();
    let l = inst.smad_certificate().unwrap().constant();
    let pairs = sample_ball_pairs(&mut rng, 6, 10.0, 10_000);
    let g = |x: ndarray::ArrayView1<f64>| inst.value(x).unwrap();
    let grad = |x: ndarray::ArrayView1<f64>| inst.gradient(x).unwrap();
    let report = check_descent_lemma(g, grad, &kernel, l, &pairs).unwrap();
    assert!(report.passed, "worst relative margin {}", report.min_relative_margin());

    let weak = check_descent_lemma(g, grad, &kernel, l / 1e4, &pairs).unwrap();
    assert!(!weak.passed);
    assert!(weak.violations > 0);
}
