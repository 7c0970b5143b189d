//! Independent oracles for the bpg test suites.
//!
//! Nothing here calls into the solver routines it is used to check: grid
//! searches, enumeration, dense eigendecompositions and finite differences
//! are written against the plain formulas.

use bpg::{QipInstance, Regularizer};
use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

/// Minimizes `f` over the box `[lo, hi]^n` by exhaustive grid search with
/// `points` nodes per axis, then zooms `rounds` times onto the two cells
/// around the incumbent.
pub fn grid_minimize(f: impl Fn(&[f64]) -> f64, n: usize, lo: f64, hi: f64, points: usize, rounds: usize) -> (Vec<f64>, f64) {
    let mut lows = vec![lo; n];
    let mut highs = vec![hi; n];
    let mut best = vec![0.0; n];
    let mut best_val = f64::INFINITY;
    let mut idx = vec![0usize; n];
    let mut u = vec![0.0; n];
    for _ in 0..=rounds {
        let steps: Vec<f64> = (0..n).map(|i| (highs[i] - lows[i]) / (points - 1) as f64).collect();
        idx.iter_mut().for_each(|v| *v = 0);
        'grid: loop {
            for i in 0..n {
                u[i] = lows[i] + steps[i] * idx[i] as f64;
            }
            let val = f(&u);
            if val < best_val {
                best_val = val;
                best.copy_from_slice(&u);
            }
            for v in idx.iter_mut() {
                *v += 1;
                if *v < points {
                    continue 'grid;
                }
                *v = 0;
            }
            break;
        }
        for i in 0..n {
            lows[i] = best[i] - 2.0 * steps[i];
            highs[i] = best[i] + 2.0 * steps[i];
        }
    }
    (best, best_val)
}

fn norm_sq(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum()
}

fn quartic(u: &[f64]) -> f64 {
    let sq = norm_sq(u);
    0.25 * sq * sq + 0.5 * sq
}

/// `lambda_theta ||u||_1 + <p, u> + 1/4 ||u||^4 + 1/2 ||u||^2`.
pub fn l1_prox_objective(p: &[f64], lambda_theta: f64, u: &[f64]) -> f64 {
    let l1: f64 = u.iter().map(|v| v.abs()).sum();
    let lin: f64 = p.iter().zip(u).map(|(a, b)| a * b).sum();
    lambda_theta * l1 + lin + quartic(u)
}

/// `<p, u> + 1/4 ||u||^4 + 1/2 ||u||^2` (to be minimized over `||u||_0 <= s`).
pub fn l0_prox_objective(p: &[f64], u: &[f64]) -> f64 {
    let lin: f64 = p.iter().zip(u).map(|(a, b)| a * b).sum();
    lin + quartic(u)
}

/// Radius of a box guaranteed to contain the prox minimizers for `p`.
fn prox_box(p: &[f64]) -> f64 {
    // Any minimizer satisfies ||u||^3 + ||u|| <= ||p||, so ||u|| <= ||p||^{1/3}.
    norm_sq(p).sqrt().cbrt() + 0.5
}

/// Brute-force l1 Bregman prox by grid refinement over the full space.
pub fn prox_l1_oracle(p: &[f64], lambda_theta: f64) -> (Vec<f64>, f64) {
    let r = prox_box(p);
    let points = if p.len() <= 2 { 201 } else { 41 };
    grid_minimize(|u| l1_prox_objective(p, lambda_theta, u), p.len(), -r, r, points, 12)
}

/// Brute-force l0 Bregman prox: enumerate every support of size `<= s`
/// and grid-minimize the objective restricted to it.
pub fn prox_l0_oracle(p: &[f64], s: usize) -> (Vec<f64>, f64) {
    let d = p.len();
    let r = prox_box(p);
    let mut best = vec![0.0; d];
    let mut best_val = 0.0; // empty support: u = 0
    for mask in 1u32..(1 << d) {
        let support: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
        if support.len() > s {
            continue;
        }
        let sub_p: Vec<f64> = support.iter().map(|&i| p[i]).collect();
        let points = if support.len() == 1 { 2001 } else { 201 };
        let (u, val) = grid_minimize(|u| l0_prox_objective(&sub_p, u), support.len(), -r, r, points, 12);
        if val < best_val {
            best_val = val;
            best = vec![0.0; d];
            for (k, &i) in support.iter().enumerate() {
                best[i] = u[k];
            }
        }
    }
    (best, best_val)
}

/// Per-coordinate scalar minimization of `tau |x| + 1/2 (x - y)^2`.
pub fn soft_threshold_oracle(y: &[f64], tau: f64) -> Vec<f64> {
    y.iter()
        .map(|&yi| {
            let r = yi.abs() + 1.0;
            grid_minimize(|x| tau * x[0].abs() + 0.5 * (x[0] - yi).powi(2), 1, -r, r, 2001, 8).0[0]
        })
        .collect()
}

/// Exhaustive `max <a, z>` over unit vectors supported on `s` coordinates.
pub fn truncation_oracle(a: &[f64], s: usize) -> f64 {
    let d = a.len();
    (1u32..(1 << d))
        .filter(|m| m.count_ones() as usize == s)
        .map(|m| (0..d).filter(|i| m & (1 << i) != 0).map(|i| a[i] * a[i]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Bisection on a sign change of an increasing function.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..4000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Largest absolute eigenvalue from a full symmetric eigendecomposition.
pub fn spectral_norm_oracle(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    m.symmetric_eigen().eigenvalues.iter().fold(0.0, |acc: f64, e| acc.max(e.abs()))
}

/// `1/4 sum_i (sum_j sum_k x_j A_i[j,k] x_k - b_i)^2` with explicit loops.
pub fn qip_value_naive(matrices: &[Array2<f64>], b: &[f64], x: &[f64]) -> f64 {
    let mut total = 0.0;
    for (a, bi) in matrices.iter().zip(b) {
        let mut q = 0.0;
        for j in 0..x.len() {
            for k in 0..x.len() {
                q += x[j] * a[[j, k]] * x[k];
            }
        }
        total += (q - bi) * (q - bi);
    }
    0.25 * total
}

/// Central finite-difference gradient with per-coordinate step `h (1 + |x_i|)`.
pub fn fd_gradient(f: impl Fn(&Array1<f64>) -> f64, x: &Array1<f64>, h: f64) -> Array1<f64> {
    let mut out = Array1::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let step = h * (1.0 + x[i].abs());
        xp[i] = x[i] + step;
        let fp = f(&xp);
        xp[i] = x[i] - step;
        let fm = f(&xp);
        xp[i] = x[i];
        out[i] = (fp - fm) / (2.0 * step);
    }
    out
}

/// `||a - b|| / max(||b||, floor)`.
pub fn rel_error(a: &Array1<f64>, b: &Array1<f64>, floor: f64) -> f64 {
    let diff = a - b;
    diff.dot(&diff).sqrt() / b.dot(b).sqrt().max(floor)
}

pub fn normal_vec<R: Rng>(rng: &mut R, n: usize) -> Array1<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `(G + G^T) / 2` with standard normal `G`.
pub fn random_symmetric<R: Rng>(rng: &mut R, d: usize) -> Array2<f64> {
    let g = Array2::from_shape_fn((d, d), |_| rng.sample::<f64, _>(StandardNormal));
    Array2::from_shape_fn((d, d), |(i, j)| 0.5 * (g[[i, j]] + g[[j, i]]))
}

pub fn random_dense_instance<R: Rng>(rng: &mut R, d: usize, m: usize, reg: Regularizer) -> (Vec<Array2<f64>>, QipInstance) {
    let matrices: Vec<Array2<f64>> = (0..m).map(|_| random_symmetric(rng, d)).collect();
    let b = normal_vec(rng, m);
    let inst = QipInstance::dense(matrices.clone(), b, reg).expect("valid random instance");
    (matrices, inst)
}
