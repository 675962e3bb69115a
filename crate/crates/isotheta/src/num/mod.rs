//! Numeric substrate: complex scalars, quadrature, finite differences,
//! small dense linear algebra, Newton iteration and truncated jets.
//!
//! Everything downstream works over `C64` in plain f64 precision. The
//! routines here carry explicit error estimates so callers can decide
//! whether a result is trustworthy instead of silently degrading.

mod fd;
mod jet;
mod mat;
mod newton;
mod quad;

pub use fd::{
    central_derivative, central_derivative_checked, fifth_point_second, seven_point_third,
    DerivativeEstimate, FiniteDifferenceSpec,
};
pub use jet::Jet2;
pub use mat::{det_inv, eig2, mat2, SquareMatrix};
pub use newton::{newton_root, newton_root_with};
pub use quad::{
    chebyshev_weighted, integrate_endpoint_singular, integrate_smooth, QuadratureRule,
    QuadratureSpec,
};

pub type C64 = num_complex::Complex64;

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Maps items to outputs, in order. With the `parallel` feature the map runs
/// on the rayon pool; the fold over results is always sequential in input
/// order, so the result is identical either way.
#[cfg(feature = "parallel")]
pub fn map_ordered<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    if items.len() < 2 {
        items.into_iter().map(f).collect()
    } else {
        items.into_par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_ordered<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Compensated (Kahan) accumulator for complex sums.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: C64,
    comp: C64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: C64) {
        let y = term - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> C64 {
        self.sum
    }
}

/// Caps the size of the worker pool used by `map_ordered`. Takes effect
/// only on the first call in a process and only with the `parallel`
/// feature; without it the library is sequential and the call is a no-op.
#[cfg(feature = "parallel")]
pub fn set_thread_count(n: usize) {
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global();
}

#[cfg(not(feature = "parallel"))]
pub fn set_thread_count(_n: usize) {}

/// Principal natural log shifted by a multiple of 2 pi i to land nearest to
/// `reference`. Keeps log-valued curves continuous across small steps.
pub fn ln_near(w: C64, reference: C64) -> C64 {
    let ln = w.ln();
    let k = ((reference.im - ln.im) / (2.0 * std::f64::consts::PI)).round();
    ln + c64(0.0, 2.0 * std::f64::consts::PI * k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut s = KahanSum::new();
        s.add(cr(1.0));
        for _ in 0..10_000 {
            s.add(cr(1e-18));
        }
        let mut plain: f64 = 1.0;
        for _ in 0..10_000 {
            plain += 1e-18;
        }
        assert!((s.value().re - (1.0 + 1e-14)).abs() < 1e-17);
        // plain summation loses the tail entirely
        assert_eq!(plain, 1.0);
    }

    #[test]
    fn ln_near_unwraps() {
        let w = cr(-1.0) + c64(0.0, -1e-9);
        // principal log sits near -i pi; ask for the branch near +i pi
        let l = ln_near(w, c64(0.0, std::f64::consts::PI));
        assert!((l.im - std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn map_ordered_preserves_order() {
        let v: Vec<usize> = (0..100).collect();
        let out = map_ordered(v, |x| x * 2);
        for (i, val) in out.iter().enumerate() {
            assert_eq!(*val, i * 2);
        }
    }
}
