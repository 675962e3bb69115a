//! Newton iteration on scalar complex functions.

use super::{central_derivative, C64, FiniteDifferenceSpec};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 64;

/// Finds a root of f near x0, stopping when |f(x)| <= tol. The derivative
/// comes from a Richardson-extrapolated central difference, so f only needs
/// to be evaluable, not differentiable in closed form.
///
/// Divergence, stalls and non-finite iterates all fail with the full list
/// of visited iterates for diagnosis.
pub fn newton_root<F>(f: F, x0: C64, tol: f64) -> Result<C64>
where
    F: Fn(C64) -> C64,
{
    assert!(tol > 0.0, "tolerance must be positive");
    let fd = FiniteDifferenceSpec {
        h: 1e-6,
        richardson_levels: 1,
    };
    let mut x = x0;
    let mut trace = vec![x0];
    let scale0 = x0.norm().max(1.0);
    for _ in 0..MAX_ITERATIONS {
        let fx = f(x);
        if !fx.is_finite() {
            break;
        }
        if fx.norm() <= tol {
            return Ok(x);
        }
        let d = central_derivative(&f, x, &fd).value;
        if !d.is_finite() || d.norm() == 0.0 {
            break;
        }
        let step = fx / d;
        x -= step;
        trace.push(x);
        if !x.is_finite() || x.norm() > 1e8 * scale0 {
            break;
        }
        if step.norm() < 1e-17 * x.norm().max(1.0) {
            // stalled at machine precision without meeting tol
            break;
        }
    }
    if f(x).is_finite() && f(x).norm() <= tol {
        return Ok(x);
    }
    Err(Error::RootFailure { trace })
}

/// Newton with a caller-supplied derivative.
pub fn newton_root_with<F, D>(f: F, df: D, x0: C64, tol: f64) -> Result<C64>
where
    F: Fn(C64) -> C64,
    D: Fn(C64) -> C64,
{
    assert!(tol > 0.0, "tolerance must be positive");
    let mut x = x0;
    let mut trace = vec![x0];
    for _ in 0..MAX_ITERATIONS {
        let fx = f(x);
        if !fx.is_finite() {
            break;
        }
        if fx.norm() <= tol {
            return Ok(x);
        }
        let d = df(x);
        if !d.is_finite() || d.norm() == 0.0 {
            break;
        }
        x -= fx / d;
        trace.push(x);
        if !x.is_finite() {
            break;
        }
    }
    if f(x).is_finite() && f(x).norm() <= tol {
        return Ok(x);
    }
    Err(Error::RootFailure { trace })
}
