//! Central finite differences with Richardson extrapolation.
//!
//! Steps are taken along the real axis in the argument; for functions
//! analytic near the base point this recovers the complex derivative.

use super::{cr, C64};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct FiniteDifferenceSpec {
    /// Base step; scaled by max(1, |x|) at the evaluation point.
    /// Callers differentiating through geometric data must pick h small
    /// enough that perturbed configurations stay pairwise distinct.
    pub h: f64,
    /// Extrapolation depth; 1 means a single 4th order elimination.
    pub richardson_levels: usize,
}

impl Default for FiniteDifferenceSpec {
    fn default() -> Self {
        // h = 1e-4 keeps the subtraction roundoff floor near 1e-11 while
        // the extrapolation removes the h^2 and h^4 truncation terms
        Self {
            h: 1e-4,
            richardson_levels: 2,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DerivativeEstimate {
    pub value: C64,
    /// Magnitude of the last extrapolation increment.
    pub error_estimate: f64,
}

/// Richardson-extrapolated central difference of f at x.
pub fn central_derivative<F>(f: F, x: C64, spec: &FiniteDifferenceSpec) -> DerivativeEstimate
where
    F: Fn(C64) -> C64,
{
    let levels = spec.richardson_levels.max(1);
    let h0 = spec.h * x.norm().max(1.0);
    // column 0: central differences at h0 / 2^i
    let mut table: Vec<C64> = (0..=levels)
        .map(|i| {
            let h = h0 / (1u64 << i) as f64;
            (f(x + cr(h)) - f(x - cr(h))) / cr(2.0 * h)
        })
        .collect();
    let mut previous_top = table[0];
    // successive 4^k eliminations; table shrinks by one per level
    for k in 1..=levels {
        let factor = (4f64).powi(k as i32);
        for i in 0..=(levels - k) {
            table[i] = (table[i + 1] * cr(factor) - table[i]) / cr(factor - 1.0);
        }
        if k == levels {
            return DerivativeEstimate {
                value: table[0],
                error_estimate: (table[0] - previous_top).norm(),
            };
        }
        previous_top = table[0];
    }
    unreachable!()
}

/// As `central_derivative`, but fails when the error estimate exceeds
/// ten times the stated tolerance.
pub fn central_derivative_checked<F>(
    f: F,
    x: C64,
    spec: &FiniteDifferenceSpec,
    tol: f64,
) -> Result<C64>
where
    F: Fn(C64) -> C64,
{
    let est = central_derivative(f, x, spec);
    if est.error_estimate > 10.0 * tol {
        return Err(Error::DerivativeUnreliable {
            estimate: est.error_estimate,
            tol,
        });
    }
    Ok(est.value)
}

/// 5 point second derivative, error O(h^4):
/// (-f(-2h) + 16 f(-h) - 30 f(0) + 16 f(h) - f(2h)) / (12 h^2).
pub fn fifth_point_second<F>(f: F, x: C64, h: f64) -> C64
where
    F: Fn(C64) -> C64,
{
    let fm2 = f(x - cr(2.0 * h));
    let fm1 = f(x - cr(h));
    let f0 = f(x);
    let fp1 = f(x + cr(h));
    let fp2 = f(x + cr(2.0 * h));
    (-fm2 + fm1 * cr(16.0) - f0 * cr(30.0) + fp1 * cr(16.0) - fp2) / cr(12.0 * h * h)
}

/// 7 point third derivative, error O(h^4):
/// (f(-3h) - 8 f(-2h) + 13 f(-h) - 13 f(h) + 8 f(2h) - f(3h)) / (8 h^3).
pub fn seven_point_third<F>(f: F, x: C64, h: f64) -> C64
where
    F: Fn(C64) -> C64,
{
    let fm3 = f(x - cr(3.0 * h));
    let fm2 = f(x - cr(2.0 * h));
    let fm1 = f(x - cr(h));
    let fp1 = f(x + cr(h));
    let fp2 = f(x + cr(2.0 * h));
    let fp3 = f(x + cr(3.0 * h));
    (fm3 - fm2 * cr(8.0) + fm1 * cr(13.0) - fp1 * cr(13.0) + fp2 * cr(8.0) - fp3)
        / cr(8.0 * h * h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_derivative_at_zero() {
        let spec = FiniteDifferenceSpec::default();
        let d = central_derivative(|z| z.exp(), cr(0.0), &spec);
        assert_abs_diff_eq!(d.value.re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(d.value.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cubic_derivative_at_two() {
        let spec = FiniteDifferenceSpec::default();
        let d = central_derivative(|z| z * z * z, cr(2.0), &spec);
        assert_abs_diff_eq!(d.value.re, 12.0, epsilon = 1e-10);
    }

    #[test]
    fn empirical_order_at_least_four_with_one_level() {
        // halving h must shrink the defect by at least 2^4
        let spec_h = FiniteDifferenceSpec {
            h: 1e-2,
            richardson_levels: 1,
        };
        let spec_h2 = FiniteDifferenceSpec {
            h: 5e-3,
            richardson_levels: 1,
        };
        let exact = cr(5.0).cos();
        let e1 = (central_derivative(|z| z.sin(), cr(5.0), &spec_h).value - exact).norm();
        let e2 = (central_derivative(|z| z.sin(), cr(5.0), &spec_h2).value - exact).norm();
        assert!(e1 / e2 >= 14.0, "order too low: e1 = {e1:.3e}, e2 = {e2:.3e}");
    }

    #[test]
    fn unreliable_estimate_is_reported() {
        // x |x| has a second-derivative jump at 0; increments stay O(h)
        let spec = FiniteDifferenceSpec {
            h: 1e-3,
            richardson_levels: 2,
        };
        let r = central_derivative_checked(|z| cr(z.re * z.re.abs()), cr(0.0), &spec, 1e-12);
        assert!(matches!(r, Err(Error::DerivativeUnreliable { .. })));
    }

    #[test]
    fn second_derivative_stencil() {
        let d2 = fifth_point_second(|z| z.exp(), cr(1.0), 1e-3);
        assert_abs_diff_eq!(d2.re, 1.0f64.exp(), epsilon = 1e-9);
    }

    #[test]
    fn third_derivative_stencil() {
        // (x^5)''' = 60 x^2 -> 240 at x = 2
        let d3 = seven_point_third(|z| z.powu(5), cr(2.0), 1e-2);
        assert_abs_diff_eq!(d3.re, 240.0, epsilon = 1e-6);
        // cubic: exactly 6 everywhere
        let d3c = seven_point_third(|z| z * z * z, cr(0.3), 1e-2);
        assert_abs_diff_eq!(d3c.re, 6.0, epsilon = 1e-7);
    }
}
