//! Order 2 truncated jets: value plus first and second derivative carried
//! through arithmetic. Used to push closed-form transformations onto
//! derivative data without finite differencing the transformed output.

use super::{cr, C64};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// (f, f', f'') at a point, with exact Leibniz/quotient propagation.
/// The second slot of a result depends only on inputs' value and first
/// two slots, so partially known inputs still give valid lower slots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub f: C64,
    pub d1: C64,
    pub d2: C64,
}

impl Jet2 {
    pub fn new(f: C64, d1: C64, d2: C64) -> Self {
        Self { f, d1, d2 }
    }

    /// The independent variable: derivative 1, curvature 0.
    pub fn var(x: C64) -> Self {
        Self::new(x, cr(1.0), cr(0.0))
    }

    pub fn constant(c: C64) -> Self {
        Self::new(c, cr(0.0), cr(0.0))
    }

    pub fn recip(self) -> Self {
        let v = cr(1.0) / self.f;
        let d1 = -self.d1 * v * v;
        // (1/b)'' = (2 b'^2 - b b'') / b^3
        let d2 = (self.d1 * self.d1 * cr(2.0) - self.f * self.d2) * v * v * v;
        Self::new(v, d1, d2)
    }

    pub fn square(self) -> Self {
        self * self
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2::new(self.f + o.f, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2::new(self.f - o.f, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2::new(
            self.f * o.f,
            self.f * o.d1 + self.d1 * o.f,
            self.f * o.d2 + self.d1 * o.d1 * cr(2.0) + self.d2 * o.f,
        )
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2::new(-self.f, -self.d1, -self.d2)
    }
}

impl Mul<C64> for Jet2 {
    type Output = Jet2;
    fn mul(self, s: C64) -> Jet2 {
        Jet2::new(self.f * s, self.d1 * s, self.d2 * s)
    }
}

impl Add<C64> for Jet2 {
    type Output = Jet2;
    fn add(self, s: C64) -> Jet2 {
        Jet2::new(self.f + s, self.d1, self.d2)
    }
}

impl Sub<C64> for Jet2 {
    type Output = Jet2;
    fn sub(self, s: C64) -> Jet2 {
        Jet2::new(self.f - s, self.d1, self.d2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::cr;

    #[test]
    fn polynomial_jet_matches_calculus() {
        // p(x) = x^3 - 2x at x = 1.5: p' = 3x^2 - 2, p'' = 6x
        let x = Jet2::var(cr(1.5));
        let p = x * x * x - x * cr(2.0);
        assert!((p.f - cr(1.5f64.powi(3) - 3.0)).norm() < 1e-14);
        assert!((p.d1 - cr(3.0 * 2.25 - 2.0)).norm() < 1e-14);
        assert!((p.d2 - cr(9.0)).norm() < 1e-14);
    }

    #[test]
    fn quotient_jet_matches_calculus() {
        // q(x) = 1 / (1 + x^2): q' = -2x q^2, q'' from the closed form
        let xv = 0.7;
        let x = Jet2::var(cr(xv));
        let q = Jet2::constant(cr(1.0)) / (x * x + cr(1.0));
        let qv = 1.0 / (1.0 + xv * xv);
        assert!((q.f - cr(qv)).norm() < 1e-14);
        assert!((q.d1 - cr(-2.0 * xv * qv * qv)).norm() < 1e-14);
        let exact_d2 = (6.0 * xv * xv - 2.0) * qv * qv * qv;
        assert!((q.d2 - cr(exact_d2)).norm() < 1e-13);
    }
}
