//! Theta functions with characteristics on a g-dimensional lattice.
//!
//! Convention: for a symmetric period matrix B with positive definite
//! imaginary part and characteristic vectors p, q,
//!
//!   Theta[p,q](z | B) = sum over m in Z^g of
//!       exp( i pi (m+p)^T B (m+p) + 2 pi i (z+q)^T (m+p) ).
//!
//! Truncation runs over sup-norm shells. The shell radius is fixed in
//! advance from an analytic tail majorant, so the radius (and therefore the
//! floating point result) does not depend on accumulation order or thread
//! count; shells are then summed in index order with compensated addition.
//! With the `parallel` feature shell sums are computed on the rayon pool and
//! folded in order, which is bitwise identical to the sequential path.

use crate::error::{Error, Result};
use crate::num::{c64, cr, map_ordered, C64, KahanSum, SquareMatrix, I};

const PI: f64 = std::f64::consts::PI;
const RADIUS_CAP: usize = 60;

/// Characteristic vectors [p, q], each of length g.
#[derive(Clone, Debug, PartialEq)]
pub struct Characteristic {
    pub p: Vec<C64>,
    pub q: Vec<C64>,
}

impl Characteristic {
    pub fn new(p: Vec<C64>, q: Vec<C64>) -> Result<Self> {
        if p.len() != q.len() || p.is_empty() || p.len() > 16 {
            return Err(Error::Invalid(format!(
                "characteristic vectors must have equal length in 1..=16, got {} and {}",
                p.len(),
                q.len()
            )));
        }
        if !p.iter().chain(q.iter()).all(|v| v.is_finite()) {
            return Err(Error::Invalid("characteristic entries must be finite".into()));
        }
        Ok(Self { p, q })
    }

    pub fn from_real(p: &[f64], q: &[f64]) -> Result<Self> {
        Self::new(
            p.iter().map(|&x| cr(x)).collect(),
            q.iter().map(|&x| cr(x)).collect(),
        )
    }

    pub fn zero(g: usize) -> Self {
        Self {
            p: vec![C64::default(); g],
            q: vec![C64::default(); g],
        }
    }

    pub fn genus(&self) -> usize {
        self.p.len()
    }

    /// True when every entry of 2p and 2q is an integer (within 1e-9).
    pub fn is_half_integer(&self) -> bool {
        let near_int = |v: C64| v.im.abs() < 1e-9 && (v.re - v.re.round()).abs() < 1e-9;
        self.p
            .iter()
            .chain(self.q.iter())
            .all(|&v| near_int(v * cr(2.0)))
    }

    /// Parity (-1)^(4 <p, q>) of a half integer characteristic.
    pub fn parity(&self) -> Result<i8> {
        if !self.is_half_integer() {
            return Err(Error::Invalid(
                "parity is defined for half integer characteristics only".into(),
            ));
        }
        let mut s = 0i64;
        for (p, q) in self.p.iter().zip(&self.q) {
            let tp = (p.re * 2.0).round() as i64;
            let tq = (q.re * 2.0).round() as i64;
            s += tp * tq;
        }
        Ok(if s.rem_euclid(2) == 0 { 1 } else { -1 })
    }

    /// Entries reduced mod 1 into [0, 1). Changes theta by at most a
    /// constant phase (value of the phase depends on the q shift).
    pub fn reduced(&self) -> Self {
        let red = |v: &C64| c64(v.re - v.re.floor(), v.im);
        Self {
            p: self.p.iter().map(red).collect(),
            q: self.q.iter().map(red).collect(),
        }
    }
}

/// Value, gradient and Hessian of a theta function, with the truncation
/// tail bound and the sup-norm shell radius actually used.
#[derive(Clone, Debug)]
pub struct ThetaValue {
    pub value: C64,
    pub grad: Vec<C64>,
    pub hess: SquareMatrix,
    pub truncation_bound: f64,
    pub radius: usize,
}

fn min_eig_symmetric(s: &[f64], g: usize) -> f64 {
    // cyclic Jacobi rotations; g <= 16 so convergence is immediate
    let mut a = s.to_vec();
    for _ in 0..64 {
        let mut off = 0.0;
        for i in 0..g {
            for j in (i + 1)..g {
                off += a[i * g + j] * a[i * g + j];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for i in 0..g {
            for j in (i + 1)..g {
                let apq = a[i * g + j];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[j * g + j] - a[i * g + i]) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..g {
                    let aik = a[i * g + k];
                    let ajk = a[j * g + k];
                    a[i * g + k] = c * aik - sn * ajk;
                    a[j * g + k] = sn * aik + c * ajk;
                }
                for k in 0..g {
                    let aki = a[k * g + i];
                    let akj = a[k * g + j];
                    a[k * g + i] = c * aki - sn * akj;
                    a[k * g + j] = sn * aki + c * akj;
                }
            }
        }
    }
    (0..g).map(|i| a[i * g + i]).fold(f64::INFINITY, f64::min)
}

/// Tail majorant over sup-norm shells of radius > s. Derivative weights up
/// to `deriv_order` are absorbed by a polynomial prefactor.
fn shell_tail_bound(
    s: usize,
    g: usize,
    mu: f64,
    rho: f64,
    cnorm: f64,
    d0: f64,
    deriv_order: u32,
) -> f64 {
    let mut tail = 0.0;
    for r in (s + 1)..(s + 400) {
        let rf = r as f64;
        let count = ((2.0 * rf + 1.0).powi(g as i32) - (2.0 * rf - 1.0).powi(g as i32)).max(1.0);
        let rt = (rf - rho).max(0.0);
        let weight = (2.0 * PI * (rf + rho + 1.0) * (g as f64).sqrt()).powi(deriv_order as i32);
        let e = -PI * mu * rt * rt + 2.0 * PI * (g as f64).sqrt() * (rf + rho) * cnorm + d0;
        let term = count * weight * e.exp();
        tail += term;
        if term < 1e-300 && rf > rho + 3.0 {
            break;
        }
    }
    tail
}

/// Evaluates Theta[p,q](z | B) together with its z-gradient and z-Hessian.
///
/// B must have positive definite imaginary part; symmetry is the caller's
/// responsibility (single-entry perturbations used by heat-equation checks
/// are accepted as-is). Fails with `TruncationFailure` if the tail bound
/// cannot be brought under `tol` within the shell radius cap.
pub fn theta_with(z: &[C64], b: &SquareMatrix, ch: &Characteristic, tol: f64) -> Result<ThetaValue> {
    let g = ch.genus();
    if z.len() != g || b.order() != g {
        return Err(Error::Invalid(format!(
            "dimension mismatch: z has {}, B has {}, characteristic has {}",
            z.len(),
            b.order(),
            g
        )));
    }
    if !z.iter().all(|v| v.is_finite()) {
        return Err(Error::Invalid("theta argument must be finite".into()));
    }
    // symmetrized imaginary part drives the convergence bound
    let mut s_im = vec![0.0; g * g];
    for i in 0..g {
        for j in 0..g {
            s_im[i * g + j] = 0.5 * (b[(i, j)].im + b[(j, i)].im);
        }
    }
    let mu = min_eig_symmetric(&s_im, g);
    if mu <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }

    // |term| = exp(-pi x^T S x - 2 pi x^T (R y + v2) + pi y^T S y - 2 pi v1^T y)
    // with n = x + i y, x = m + Re p, y = Im p, v = z + q = v1 + i v2.
    let y: Vec<f64> = ch.p.iter().map(|v| v.im).collect();
    let v: Vec<C64> = z.iter().zip(&ch.q).map(|(a, b)| a + b).collect();
    let mut c_vec = vec![0.0; g];
    for k in 0..g {
        let mut acc = v[k].im;
        for l in 0..g {
            acc += b[(k, l)].re * y[l];
        }
        c_vec[k] = acc;
    }
    let cnorm = c_vec.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rho = ch.p.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    let mut d0 = 0.0;
    for k in 0..g {
        let mut sy = 0.0;
        for l in 0..g {
            sy += s_im[k * g + l] * y[l];
        }
        d0 += PI * y[k] * sy - 2.0 * PI * v[k].re * y[k];
    }

    // fixed radius from the analytic bound (order 2 covers the Hessian)
    let mut radius = None;
    for s in 1..=RADIUS_CAP {
        if shell_tail_bound(s, g, mu, rho, cnorm, d0, 2) <= tol {
            radius = Some(s);
            break;
        }
    }
    let radius = radius.ok_or(Error::TruncationFailure {
        bound: shell_tail_bound(RADIUS_CAP, g, mu, rho, cnorm, d0, 2),
        tol,
        radius: RADIUS_CAP,
    })?;

    // one shell = all m with sup norm exactly s, enumerated in odometer order
    let two_pi_i = I * cr(2.0 * PI);
    let shell_sum = |s: usize| -> (C64, Vec<C64>, Vec<C64>) {
        let si = s as i64;
        let mut value = KahanSum::new();
        let mut grad = vec![KahanSum::new(); g];
        let mut hess = vec![KahanSum::new(); g * g];
        let mut m = vec![-si; g];
        loop {
            if m.iter().any(|&x| x.abs() == si) || s == 0 {
                // n = m + p
                let n: Vec<C64> = (0..g).map(|k| cr(m[k] as f64) + ch.p[k]).collect();
                let mut quad = C64::default();
                for k in 0..g {
                    let mut bn = C64::default();
                    for l in 0..g {
                        bn += b[(k, l)] * n[l];
                    }
                    quad += n[k] * bn;
                }
                let mut lin = C64::default();
                for k in 0..g {
                    lin += v[k] * n[k];
                }
                let term = (I * cr(PI) * quad + two_pi_i * lin).exp();
                value.add(term);
                for k in 0..g {
                    let wk = two_pi_i * n[k];
                    grad[k].add(wk * term);
                    for l in 0..g {
                        hess[k * g + l].add(wk * two_pi_i * n[l] * term);
                    }
                }
            }
            // odometer increment over the box [-s, s]^g
            let mut carry = 0;
            while carry < g {
                m[carry] += 1;
                if m[carry] <= si {
                    break;
                }
                m[carry] = -si;
                carry += 1;
            }
            if carry == g {
                break;
            }
            if s == 0 {
                break; // single point shell
            }
        }
        (
            value.value(),
            grad.iter().map(|k| k.value()).collect(),
            hess.iter().map(|k| k.value()).collect(),
        )
    };

    let shells: Vec<usize> = (0..=radius).collect();
    let partials = map_ordered(shells, shell_sum);

    let mut value = KahanSum::new();
    let mut grad = vec![KahanSum::new(); g];
    let mut hess = vec![KahanSum::new(); g * g];
    for (pv, pg, ph) in &partials {
        value.add(*pv);
        for k in 0..g {
            grad[k].add(pg[k]);
        }
        for k in 0..g * g {
            hess[k].add(ph[k]);
        }
    }
    let mut hess_m = SquareMatrix::zeros(g);
    for k in 0..g {
        for l in 0..g {
            hess_m[(k, l)] = hess[k * g + l].value();
        }
    }
    Ok(ThetaValue {
        value: value.value(),
        grad: grad.iter().map(|k| k.value()).collect(),
        hess: hess_m,
        truncation_bound: shell_tail_bound(radius, g, mu, rho, cnorm, d0, 2),
        radius,
    })
}

/// Value-only wrapper around [`theta_with`].
pub fn theta(z: &[C64], b: &SquareMatrix, ch: &Characteristic, tol: f64) -> Result<C64> {
    Ok(theta_with(z, b, ch, tol)?.value)
}

/// Defect of the heat equation  d^2 Theta / dz_l dz_k  =  4 pi i dTheta/dB_lk
/// with the B-derivative taken by central difference on the single entry
/// (l, k). Returns the absolute defect.
pub fn heat_equation_defect(
    z: &[C64],
    b: &SquareMatrix,
    ch: &Characteristic,
    l: usize,
    k: usize,
    h: f64,
    tol: f64,
) -> Result<f64> {
    let lhs = theta_with(z, b, ch, tol)?.hess[(l, k)];
    let mut bp = b.clone();
    bp[(l, k)] += cr(h);
    let tp = theta(z, &bp, ch, tol)?;
    let mut bm = b.clone();
    bm[(l, k)] -= cr(h);
    let tm = theta(z, &bm, ch, tol)?;
    let db = (tp - tm) / cr(2.0 * h);
    Ok((lhs - I * cr(4.0 * PI) * db).norm())
}

// ---------------------------------------------------------------------------
// Jacobi theta functions (g = 1 specialization)
// ---------------------------------------------------------------------------

/// Jacobi theta functions theta_1 .. theta_4 of modulus sigma (Im sigma > 0),
/// with the d-th z-derivative, d in 0..=2.
///
///   theta_1(z) = -Theta[1/2,1/2](z | sigma)
///   theta_2(z) =  Theta[1/2,0](z | sigma)
///   theta_3(z) =  Theta[0,0](z | sigma)
///   theta_4(z) =  Theta[0,1/2](z | sigma)
pub fn jacobi_theta_d(kind: usize, z: C64, sigma: C64, d: usize, tol: f64) -> Result<C64> {
    if !(1..=4).contains(&kind) {
        return Err(Error::Invalid(format!("jacobi theta kind must be 1..=4, got {kind}")));
    }
    if d > 2 {
        return Err(Error::Invalid(format!("derivative order must be 0..=2, got {d}")));
    }
    let (p, q, sign) = match kind {
        1 => (0.5, 0.5, -1.0),
        2 => (0.5, 0.0, 1.0),
        3 => (0.0, 0.0, 1.0),
        _ => (0.0, 0.5, 1.0),
    };
    let ch = Characteristic::from_real(&[p], &[q])?;
    let mut b = SquareMatrix::zeros(1);
    b[(0, 0)] = sigma;
    let tv = theta_with(&[z], &b, &ch, tol)?;
    let raw = match d {
        0 => tv.value,
        1 => tv.grad[0],
        _ => tv.hess[(0, 0)],
    };
    Ok(raw * cr(sign))
}

/// Jacobi theta value without derivative.
pub fn jacobi_theta(kind: usize, z: C64, sigma: C64, tol: f64) -> Result<C64> {
    jacobi_theta_d(kind, z, sigma, 0, tol)
}

/// Theta constants (z = 0) of kinds 2, 3, 4 raised to the 4th power,
/// as used by the modular lambda ratios.
pub fn jacobi_fourth_powers(sigma: C64, tol: f64) -> Result<(C64, C64, C64)> {
    let t2 = jacobi_theta(2, C64::default(), sigma, tol)?;
    let t3 = jacobi_theta(3, C64::default(), sigma, tol)?;
    let t4 = jacobi_theta(4, C64::default(), sigma, tol)?;
    Ok((t2.powu(4), t3.powu(4), t4.powu(4)))
}
