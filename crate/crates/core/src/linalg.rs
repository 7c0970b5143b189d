//! Small dense helpers: symmetry checks and spectral norms of symmetric matrices.

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BpgError, Result};

const POWER_RESTARTS: u64 = 3;
const POWER_MAX_ITERS: usize = 500;
const POWER_RTOL: f64 = 1e-12;

/// Largest entrywise asymmetry `max |A_ij - A_ji|`.
pub fn asymmetry(a: ArrayView2<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}

/// Spectral norm (largest absolute eigenvalue) of a symmetric matrix.
///
/// Runs power iteration on `A^2` from three seeded random starts, stopping when
/// successive Rayleigh quotients agree to `1e-12` relative. If no start
/// converges within the iteration cap (clustered top eigenvalues), the
/// eigenvalues are computed by cyclic Jacobi rotations instead.
pub fn spectral_norm(a: ArrayView2<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(BpgError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(BpgError::NonFinite("matrix entries"));
    }
    let n = a.nrows();
    if n == 0 || a.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }

    let mut best = 0.0f64;
    let mut converged = false;
    for restart in 0..POWER_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9 ^ restart);
        let mut v: Array1<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.dot(&v).sqrt();
        if norm == 0.0 {
            continue;
        }
        v /= norm;
        let mut prev = f64::NAN;
        for _ in 0..POWER_MAX_ITERS {
            let av = a.dot(&v);
            // Rayleigh quotient of A^2 at unit v is ||A v||^2.
            let rq = av.dot(&av);
            if rq == 0.0 {
                break;
            }
            let w = a.dot(&av);
            let wn = w.dot(&w).sqrt();
            if wn == 0.0 {
                break;
            }
            v = w / wn;
            if (rq - prev).abs() <= POWER_RTOL * rq {
                converged = true;
                best = best.max(rq.sqrt());
                break;
            }
            prev = rq;
        }
    }
    if converged {
        return Ok(best);
    }
    let eig = jacobi_eigenvalues(a.to_owned());
    Ok(eig.iter().fold(0.0f64, |m, e| m.max(e.abs())))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps.
pub(crate) fn jacobi_eigenvalues(mut a: Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let frob = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * frob {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[[i, i]]).collect()
}
