//! Scalar cubic solvers behind the closed-form Bregman proximal maps.
//!
//! Both cubics are strictly increasing and convex on the nonnegative axis, so
//! Newton started from a point right of the root decreases monotonically onto
//! it. The bracket is kept anyway and a bisection step replaces any Newton
//! step that leaves it.

use crate::error::{BpgError, Result};

const MAX_ITERS: usize = 200;

/// Safeguarded Newton on an increasing convex `f` with `f(lo) <= 0 <= f(hi)`.
fn newton_bracketed<F>(f: F, mut lo: f64, mut hi: f64) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let mut t = hi;
    for _ in 0..MAX_ITERS {
        let (val, deriv) = f(t);
        if val == 0.0 {
            return t;
        }
        if val > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let mut next = t - val / deriv;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= f64::EPSILON * t.abs() || hi - lo <= f64::EPSILON * hi {
            t = next;
            break;
        }
        t = next;
    }
    // Pick whichever of the final point and the bracket ends has the smallest residual.
    [t, lo, hi]
        .into_iter()
        .min_by(|a, b| f(*a).0.abs().total_cmp(&f(*b).0.abs()))
        .unwrap_or(t)
}

fn check_input(value: f64, what: &'static str) -> Result<()> {
    if !value.is_finite() {
        return Err(BpgError::NonFinite(what));
    }
    if value < 0.0 {
        return Err(BpgError::InvalidParameter(format!("{what} must be nonnegative, got {value}")));
    }
    Ok(())
}

/// Unique positive root `t*` of `a t^3 + t - 1 = 0` for `a = v_norm_sq >= 0`.
///
/// The root lies in `(0, min(1, a^{-1/3})]`.
pub fn cubic_root_l1(v_norm_sq: f64) -> Result<f64> {
    check_input(v_norm_sq, "cubic coefficient")?;
    if v_norm_sq == 0.0 {
        return Ok(1.0);
    }
    let a = v_norm_sq;
    let hi = 1.0f64.min(a.cbrt().recip());
    Ok(newton_bracketed(|t| (a * t * t * t + t - 1.0, 3.0 * a * t * t + 1.0), 0.0, hi))
}

/// Unique nonnegative root `eta*` of `eta^3 + eta - c = 0` for `c >= 0`.
///
/// The root lies in `[0, min(c, c^{1/3})]`.
pub fn cubic_root_l0(c: f64) -> Result<f64> {
    check_input(c, "cubic constant")?;
    if c == 0.0 {
        return Ok(0.0);
    }
    let hi = c.min(c.cbrt());
    Ok(newton_bracketed(|e| (e * e * e + e - c, 3.0 * e * e + 1.0), 0.0, hi))
}
