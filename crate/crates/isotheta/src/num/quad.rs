//! Quadrature on complex line segments.
//!
//! Two rules cover everything the curve layer needs:
//!
//! * Gauss-Chebyshev (first kind) with node doubling, for integrands with at
//!   worst inverse square root singularities at the segment endpoints. The
//!   substitution x = c + d u absorbs a factor 1/sqrt(1 - u^2), so smooth
//!   and endpoint-singular integrands alike converge geometrically.
//! * Adaptive Gauss-Legendre (15 point panels, bisection), for integrands
//!   smooth on the closed segment. Panel nodes are strictly interior, which
//!   also tolerates removable endpoint limits.

use super::{cr, C64, KahanSum};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureRule {
    GaussChebyshev,
    GaussLegendreAdaptive,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureSpec {
    pub rule: QuadratureRule,
    /// Starting node count for doubling; clamped below at 4.
    pub nodes: usize,
    /// Requested absolute tolerance, relative above unit magnitude.
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule: QuadratureRule::GaussChebyshev,
            nodes: 16,
            tol: 1e-12,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

const MAX_CHEB_NODES: usize = 1 << 18;

/// Chebyshev-weighted integral of g over [-1, 1]:
///
///   integral of g(u) / sqrt(1 - u^2) du  =  (pi / n) * sum g(u_k),
///   u_k = cos((2k - 1) pi / (2n)).
///
/// Doubles n until two successive estimates agree within tol. Returns the
/// value and the last doubling increment as an error estimate.
pub fn chebyshev_weighted<F>(g: F, start_nodes: usize, tol: f64) -> Result<(C64, f64)>
where
    F: Fn(f64) -> C64,
{
    let mut n = start_nodes.max(4);
    let mut prev: Option<C64> = None;
    loop {
        let mut acc = KahanSum::new();
        for k in 1..=n {
            let angle = (2 * k - 1) as f64 * std::f64::consts::PI / (2 * n) as f64;
            acc.add(g(angle.cos()));
        }
        let est = acc.value() * cr(std::f64::consts::PI / n as f64);
        if let Some(p) = prev {
            let diff = (est - p).norm();
            if diff <= tol * est.norm().max(1.0) {
                return Ok((est, diff));
            }
            if n >= MAX_CHEB_NODES {
                return Err(Error::QuadratureFailure {
                    nodes: n,
                    last: est,
                    previous: p,
                });
            }
        }
        prev = Some(est);
        n *= 2;
    }
}

/// Integrates f along the straight segment from a to b. f may blow up like
/// an inverse square root at either endpoint; everywhere else it must be
/// analytic on the open segment.
pub fn integrate_endpoint_singular<F>(f: F, a: C64, b: C64, spec: &QuadratureSpec) -> Result<C64>
where
    F: Fn(C64) -> C64,
{
    let c = (a + b) * cr(0.5);
    let d = (b - a) * cr(0.5);
    match spec.rule {
        QuadratureRule::GaussChebyshev => {
            // x = c + d u, dx = d du; the sqrt(1 - u^2) factor cancels the
            // Chebyshev weight so endpoint singularities integrate cleanly.
            let g = |u: f64| f(c + d * cr(u)) * d * cr((1.0 - u * u).sqrt());
            let (value, _err) = chebyshev_weighted(g, spec.nodes, spec.tol)?;
            Ok(value)
        }
        QuadratureRule::GaussLegendreAdaptive => {
            let g = |u: f64| f(c + d * cr(u)) * d;
            gauss_legendre_adaptive(&g, -1.0, 1.0, spec.tol)
        }
    }
}

/// Integrates a smooth f along the segment from a to b with adaptive
/// Gauss-Legendre panels. Endpoint values are never sampled.
pub fn integrate_smooth<F>(f: F, a: C64, b: C64, tol: f64) -> Result<C64>
where
    F: Fn(C64) -> C64,
{
    let c = (a + b) * cr(0.5);
    let d = (b - a) * cr(0.5);
    let g = |u: f64| f(c + d * cr(u)) * d;
    gauss_legendre_adaptive(&g, -1.0, 1.0, tol)
}

// 15 point Gauss-Legendre nodes and weights on [-1, 1] (symmetric half).
const GL15_X: [f64; 8] = [
    0.0,
    0.2011940939974345,
    0.3941513470775634,
    0.5709721726085388,
    0.7244177313601701,
    0.8482065834104272,
    0.9372733924007060,
    0.9879925180204854,
];
const GL15_W: [f64; 8] = [
    0.2025782419255609,
    0.1984314853271112,
    0.1861610000155619,
    0.1662692058169938,
    0.1395706779261539,
    0.1071592204671718,
    0.0703660474881081,
    0.0307532419961186,
];

fn gl15_panel<F>(g: &F, lo: f64, hi: f64) -> C64
where
    F: Fn(f64) -> C64,
{
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = g(mid) * cr(GL15_W[0]);
    for i in 1..8 {
        let dx = half * GL15_X[i];
        acc += (g(mid + dx) + g(mid - dx)) * cr(GL15_W[i]);
    }
    acc * cr(half)
}

fn gauss_legendre_adaptive<F>(g: &F, lo: f64, hi: f64, tol: f64) -> Result<C64>
where
    F: Fn(f64) -> C64,
{
    // whole-panel estimate drives the global scale for panel acceptance
    let coarse = gl15_panel(g, lo, hi);
    let scale = coarse.norm().max(1.0);
    let mut total = KahanSum::new();
    // stack of (lo, hi, estimate, depth)
    let mut stack = vec![(lo, hi, coarse, 0usize)];
    while let Some((a, b, est, depth)) = stack.pop() {
        let mid = 0.5 * (a + b);
        let left = gl15_panel(g, a, mid);
        let right = gl15_panel(g, mid, b);
        let refined = left + right;
        if (refined - est).norm() <= tol * scale * 0.5 || depth >= 48 {
            if depth >= 48 && (refined - est).norm() > tol * scale {
                return Err(Error::QuadratureFailure {
                    nodes: 15 << depth.min(20),
                    last: refined,
                    previous: est,
                });
            }
            total.add(refined);
        } else {
            stack.push((a, mid, left, depth + 1));
            stack.push((mid, b, right, depth + 1));
        }
    }
    Ok(total.value())
}
