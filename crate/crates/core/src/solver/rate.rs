//! Descriptive rate diagnostics: fits log step norms against `k` (geometric
//! regime) and against `log k` (sublinear regime). Nothing is asserted about
//! which regime a given problem must land in.

use super::trace::IterateTrace;
use crate::error::{BpgError, Result};

/// Minimum number of usable points after the transient.
pub const MIN_RATE_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateRegime {
    /// The step norm reached exactly zero.
    Finite,
    Geometric,
    Sublinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub regime: RateRegime,
    /// Fitted ratio `tau` in `||x^k - x^{k-1}|| ~ omega tau^k`.
    pub tau: f64,
    pub geometric_r2: f64,
    /// Fitted `p` in `||x^k - x^{k-1}|| ~ omega k^{-p}`.
    pub sublinear_exponent: f64,
    pub sublinear_r2: f64,
    pub points: usize,
}

/// Ordinary least squares `y ~ a + b x`; returns `(b, r2)`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, r2)
}

/// Fits `(k, step_norm)` pairs with `k >= 1`.
pub fn rate_fit_steps(steps: &[(usize, f64)]) -> Result<RateReport> {
    let transient = (steps.len() / 10).max(1).min(steps.len());
    let window = &steps[transient..];
    let first_zero = window.iter().position(|&(_, s)| s == 0.0);
    let positive = &window[..first_zero.unwrap_or(window.len())];

    if first_zero.is_none() && positive.len() < MIN_RATE_POINTS {
        return Err(BpgError::InsufficientData(format!(
            "{} usable step norms after a transient of {transient}, need {MIN_RATE_POINTS}",
            positive.len()
        )));
    }

    let (tau, geometric_r2, sublinear_exponent, sublinear_r2) = if positive.len() >= 3 {
        let ks: Vec<f64> = positive.iter().map(|&(k, _)| k as f64).collect();
        let log_ks: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
        let log_s: Vec<f64> = positive.iter().map(|&(_, s)| s.ln()).collect();
        let (g_slope, g_r2) = linear_fit(&ks, &log_s);
        let (s_slope, s_r2) = linear_fit(&log_ks, &log_s);
        (g_slope.exp(), g_r2, -s_slope, s_r2)
    } else {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    };

    let regime = if first_zero.is_some() {
        RateRegime::Finite
    } else if geometric_r2 >= sublinear_r2 {
        RateRegime::Geometric
    } else {
        RateRegime::Sublinear
    };
    Ok(RateReport { regime, tau, geometric_r2, sublinear_exponent, sublinear_r2, points: positive.len() })
}

pub fn rate_fit(trace: &IterateTrace) -> Result<RateReport> {
    let steps: Vec<(usize, f64)> = trace.steps().iter().map(|r| (r.k, r.step_norm)).collect();
    rate_fit_steps(&steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steps_of(seq: impl Fn(usize) -> f64, n: usize) -> Vec<(usize, f64)> {
        (1..=n).map(|k| (k, (seq(k) - seq(k - 1)).abs())).collect()
    }

    #[test]
    fn geometric_sequence() {
        let report = rate_fit_steps(&steps_of(|k| 0.5f64.powi(k as i32), 60)).unwrap();
        assert_eq!(report.regime, RateRegime::Geometric);
        assert!((report.tau - 0.5).abs() <= 1e-6, "tau {}", report.tau);
        assert!(report.geometric_r2 > 0.999_999);
    }

    #[test]
    fn sublinear_sequence() {
        let report = rate_fit_steps(&steps_of(|k| ((k + 1) as f64).powi(-2), 400)).unwrap();
        assert_eq!(report.regime, RateRegime::Sublinear);
        assert!(report.sublinear_r2 > report.geometric_r2);
    }

    #[test]
    fn finite_termination() {
        let mut steps = steps_of(|k| 0.5f64.powi(k as i32), 10);
        steps.extend((11..40).map(|k| (k, 0.0)));
        assert_eq!(rate_fit_steps(&steps).unwrap().regime, RateRegime::Finite);
    }

    #[test]
    fn too_short() {
        let steps = steps_of(|k| 0.5f64.powi(k as i32), 15);
        assert!(matches!(rate_fit_steps(&steps), Err(BpgError::InsufficientData(_))));
        assert!(rate_fit_steps(&[]).is_err());
    }
}
