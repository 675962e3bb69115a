//! Small dense complex matrices (order 1 through 16), row major.
//!
//! Sizes stay in the single digits here (2x2 Fuchsian residues, g x g period
//! matrices), so a compact Vec-backed type with partial-pivot elimination
//! beats pulling in a full linear algebra stack.

use super::{cr, C64};
use crate::error::{Error, Result};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    a: Vec<C64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=16).contains(&n), "order must be in 1..=16");
        Self {
            n,
            a: vec![C64::default(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = cr(1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has wrong length");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = self.clone();
        for v in &mut m.a {
            *v *= s;
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.a.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Entry-wise max-norm distance to another matrix.
    pub fn max_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.a
            .iter()
            .zip(&other.a)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.a[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.a[i * self.n + j]
    }
}

impl Add for &SquareMatrix {
    type Output = SquareMatrix;
    fn add(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, rhs.n);
        let mut m = self.clone();
        for (x, y) in m.a.iter_mut().zip(&rhs.a) {
            *x += y;
        }
        m
    }
}

impl Sub for &SquareMatrix {
    type Output = SquareMatrix;
    fn sub(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, rhs.n);
        let mut m = self.clone();
        for (x, y) in m.a.iter_mut().zip(&rhs.a) {
            *x -= y;
        }
        m
    }
}

impl Sub for SquareMatrix {
    type Output = SquareMatrix;
    fn sub(self, rhs: SquareMatrix) -> SquareMatrix {
        &self - &rhs
    }
}

impl Add for SquareMatrix {
    type Output = SquareMatrix;
    fn add(self, rhs: SquareMatrix) -> SquareMatrix {
        &self + &rhs
    }
}

impl Mul for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let v = self[(i, k)];
                if v == C64::default() {
                    continue;
                }
                for j in 0..n {
                    m[(i, j)] += v * rhs[(k, j)];
                }
            }
        }
        m
    }
}

impl Mul for SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: SquareMatrix) -> SquareMatrix {
        &self * &rhs
    }
}

impl Neg for &SquareMatrix {
    type Output = SquareMatrix;
    fn neg(self) -> SquareMatrix {
        self.scale(cr(-1.0))
    }
}

/// 2x2 convenience constructor, row major.
pub fn mat2(a: C64, b: C64, c: C64, d: C64) -> SquareMatrix {
    SquareMatrix::from_rows(&[vec![a, b], vec![c, d]])
}

/// Eigenvalues of a 2x2 matrix via the characteristic polynomial.
pub fn eig2(m: &SquareMatrix) -> (C64, C64) {
    assert_eq!(m.order(), 2);
    let tr = m.trace();
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr - det * cr(4.0)).sqrt();
    ((tr + disc) * cr(0.5), (tr - disc) * cr(0.5))
}

/// Determinant and inverse by Gaussian elimination with partial pivoting.
/// Orders 1 and 2 use closed forms. A determinant below 1e-13 * ||M||^n
/// is treated as singular.
pub fn det_inv(m: &SquareMatrix) -> Result<(C64, SquareMatrix)> {
    let n = m.order();
    let threshold = 1e-13 * m.max_norm().powi(n as i32).max(f64::MIN_POSITIVE);
    let singular = |det: C64| Error::SingularMatrix {
        det_abs: det.norm(),
        threshold,
    };
    match n {
        1 => {
            let det = m[(0, 0)];
            if det.norm() < threshold {
                return Err(singular(det));
            }
            let mut inv = SquareMatrix::zeros(1);
            inv[(0, 0)] = cr(1.0) / det;
            Ok((det, inv))
        }
        2 => {
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            if det.norm() < threshold {
                return Err(singular(det));
            }
            let inv = mat2(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]).scale(cr(1.0) / det);
            Ok((det, inv))
        }
        _ => {
            // augmented elimination [M | I] -> [I | M^-1]
            let mut work = m.clone();
            let mut inv = SquareMatrix::identity(n);
            let mut det = cr(1.0);
            for col in 0..n {
                let (pivot_row, pivot_mag) = (col..n)
                    .map(|r| (r, work[(r, col)].norm()))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                if pivot_mag == 0.0 {
                    return Err(singular(C64::default()));
                }
                if pivot_row != col {
                    for j in 0..n {
                        let (x, y) = (work[(col, j)], work[(pivot_row, j)]);
                        work[(col, j)] = y;
                        work[(pivot_row, j)] = x;
                        let (x, y) = (inv[(col, j)], inv[(pivot_row, j)]);
                        inv[(col, j)] = y;
                        inv[(pivot_row, j)] = x;
                    }
                    det = -det;
                }
                let pivot = work[(col, col)];
                det *= pivot;
                let pinv = cr(1.0) / pivot;
                for j in 0..n {
                    work[(col, j)] *= pinv;
                    inv[(col, j)] *= pinv;
                }
                for r in 0..n {
                    if r == col {
                        continue;
                    }
                    let factor = work[(r, col)];
                    if factor == C64::default() {
                        continue;
                    }
                    for j in 0..n {
                        let wj = work[(col, j)];
                        let ij = inv[(col, j)];
                        work[(r, j)] -= factor * wj;
                        inv[(r, j)] -= factor * ij;
                    }
                }
            }
            if det.norm() < threshold {
                return Err(singular(det));
            }
            Ok((det, inv))
        }
    }
}
