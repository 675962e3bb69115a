//! Monodromy verification by numerical transport.
//!
//! The linear system dPhi/dlambda = (sum_j A_j / (lambda - lambda_j)) Phi is
//! integrated around one branch point at a time along an explicit loop from
//! a distant real base point. The transported matrices are compared with
//! the loop multiplier formulas attached to the characteristic, after a
//! best fit change of basis (monodromy is only defined up to a global
//! conjugation and a global sign).

use crate::curve::BranchConfiguration;
use crate::error::{Error, Result};
use crate::num::{cr, det_inv, eig2, mat2, SquareMatrix, C64, I};
use crate::schlesinger::{monodromy_matrices, monodromy_multipliers, SchlesingerSolution};

use std::f64::consts::PI;

/// One parametrized piece of an integration path.
#[derive(Clone, Copy, Debug)]
pub enum PathLeg {
    Line { from: C64, to: C64 },
    /// circular arc around `center`; angles in radians, traversed from
    /// `start` to `end` (counterclockwise when end > start)
    Arc { center: C64, radius: f64, start: f64, end: f64 },
}

impl PathLeg {
    pub fn point(&self, s: f64) -> C64 {
        match *self {
            PathLeg::Line { from, to } => from + (to - from) * cr(s),
            PathLeg::Arc { center, radius, start, end } => {
                let th = start + (end - start) * s;
                center + cr(radius) * (I * cr(th)).exp()
            }
        }
    }

    pub fn velocity(&self, s: f64) -> C64 {
        match *self {
            PathLeg::Line { from, to } => to - from,
            PathLeg::Arc { center: _, radius, start, end } => {
                let th = start + (end - start) * s;
                cr(radius) * I * cr(end - start) * (I * cr(th)).exp()
            }
        }
    }
}

fn point_segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * cr(t))).norm()
}

/// Loop around branch point j: out from a real base point far to the right,
/// over the configuration at a safe height, straight down onto a small
/// counterclockwise circle, and back the same way. Every leg keeps a
/// clearance of 0.1 min_gap from all branch points; if the straight descent
/// cannot, two slanted descents are tried before giving up.
pub fn loop_legs(cfg: &BranchConfiguration, j: usize) -> Result<Vec<PathLeg>> {
    let pts = cfg.points();
    if j >= pts.len() {
        return Err(Error::Invalid(format!("branch point index {j} out of range")));
    }
    let diam = cfg.diameter();
    let min_gap = cfg.min_gap();
    let radius = 0.25 * min_gap;
    let clearance = 0.1 * min_gap;
    let max_re = pts.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    let max_im = pts.iter().map(|p| p.im).fold(f64::NEG_INFINITY, f64::max);
    let base = cr(max_re + 10.0 * diam);
    let height = max_im + 2.0 * diam;
    let hover_base = C64::new(base.re, height);
    let target = pts[j];

    let clears = |legs: &[PathLeg]| -> bool {
        for leg in legs {
            for (k, p) in pts.iter().enumerate() {
                let d = match *leg {
                    PathLeg::Line { from, to } => point_segment_distance(*p, from, to),
                    PathLeg::Arc { center, radius, .. } => {
                        if k == j {
                            radius
                        } else {
                            ((*p - center).norm() - radius).abs()
                        }
                    }
                };
                if d < clearance * (1.0 - 1e-12) {
                    return false;
                }
            }
        }
        true
    };

    for slant in [0.0, 0.5 * min_gap, -0.5 * min_gap] {
        let hover_j = C64::new(target.re + slant, height);
        let entry = target + I * cr(radius);
        let legs = vec![
            PathLeg::Line { from: base, to: hover_base },
            PathLeg::Line { from: hover_base, to: hover_j },
            PathLeg::Line { from: hover_j, to: entry },
            PathLeg::Arc {
                center: target,
                radius,
                start: 0.5 * PI,
                end: 0.5 * PI + 2.0 * PI,
            },
            PathLeg::Line { from: entry, to: hover_j },
            PathLeg::Line { from: hover_j, to: hover_base },
            PathLeg::Line { from: hover_base, to: base },
        ];
        if clears(&legs) {
            return Ok(legs);
        }
    }
    Err(Error::Invalid(format!(
        "no clear descent onto branch point {j}"
    )))
}

/// Integration controls for the transport.
#[derive(Clone, Copy, Debug)]
pub struct TransportOptions {
    /// local error tolerance per step, relative to the solution scale
    pub step_tol: f64,
    pub max_steps: usize,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self { step_tol: 1e-10, max_steps: 200_000 }
    }
}

type Mat2 = [C64; 4];

fn m2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn m2_norm(a: &Mat2) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

// Dormand-Prince 5(4) coefficients
const DP_C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Transports the fundamental solution along the legs, starting from the
/// identity, with adaptive embedded Runge-Kutta steps.
pub fn transport_along(
    legs: &[PathLeg],
    points: &[C64],
    a: &[SquareMatrix],
    opts: &TransportOptions,
) -> Result<SquareMatrix> {
    let a2: Vec<Mat2> = a
        .iter()
        .map(|m| [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
        .collect();
    let rhs = |leg: &PathLeg, s: f64, phi: &Mat2| -> Mat2 {
        let lam = leg.point(s);
        let vel = leg.velocity(s);
        let mut coeff: Mat2 = [C64::default(); 4];
        for (aj, &pj) in a2.iter().zip(points) {
            let w = vel / (lam - pj);
            for (slot, &entry) in coeff.iter_mut().zip(aj) {
                *slot += entry * w;
            }
        }
        m2_mul(&coeff, phi)
    };

    let mut phi: Mat2 = [cr(1.0), C64::default(), C64::default(), cr(1.0)];
    let mut steps = 0usize;
    for leg in legs {
        let mut s = 0.0f64;
        let mut h = 0.05f64;
        while s < 1.0 {
            if steps >= opts.max_steps {
                return Err(Error::StepUnderflow);
            }
            steps += 1;
            h = h.min(1.0 - s);
            if h < 1e-14 {
                return Err(Error::StepUnderflow);
            }
            let mut k: [Mat2; 7] = [[C64::default(); 4]; 7];
            k[0] = rhs(leg, s, &phi);
            for stage in 0..6 {
                let mut y = phi;
                for (l, kl) in k.iter().enumerate().take(stage + 1) {
                    let w = cr(h * DP_A[stage][l]);
                    for (slot, &v) in y.iter_mut().zip(kl) {
                        *slot += v * w;
                    }
                }
                k[stage + 1] = rhs(leg, s + DP_C[stage] * h, &y);
            }
            let mut y5 = phi;
            let mut y4 = phi;
            for (l, kl) in k.iter().enumerate() {
                let w5 = cr(h * DP_B5[l]);
                let w4 = cr(h * DP_B4[l]);
                for idx in 0..4 {
                    y5[idx] += kl[idx] * w5;
                    y4[idx] += kl[idx] * w4;
                }
            }
            let mut err = 0.0f64;
            for idx in 0..4 {
                err = err.max((y5[idx] - y4[idx]).norm());
            }
            let scale = m2_norm(&y5).max(1.0);
            if err <= opts.step_tol * scale {
                phi = y5;
                s += h;
            }
            let ratio = if err > 0.0 {
                0.9 * (opts.step_tol * scale / err).powf(0.2)
            } else {
                5.0
            };
            h *= ratio.clamp(0.2, 5.0);
        }
    }
    Ok(mat2(phi[0], phi[1], phi[2], phi[3]))
}

/// Monodromy of the family around branch point j, transported from the
/// distant base point.
pub fn transport_monodromy(
    cfg: &BranchConfiguration,
    a: &[SquareMatrix],
    j: usize,
    opts: &TransportOptions,
) -> Result<SquareMatrix> {
    let legs = loop_legs(cfg, j)?;
    transport_along(&legs, cfg.points(), a, opts)
}

/// Outcome of comparing transported monodromies with the multiplier
/// formulas.
#[derive(Clone, Debug)]
pub struct MonodromyReport {
    pub transported: Vec<SquareMatrix>,
    pub predicted: Vec<SquareMatrix>,
    /// best fit C with C P_j C^-1 ~ N_j, normalized to det 1 when possible
    pub conjugation: SquareMatrix,
    /// max_j of the conjugated mismatch
    pub conjugation_defect: f64,
    /// max_j |tr P_j|
    pub trace_defect: f64,
    /// max_j eigenvalue distance from +-i
    pub eigenvalue_defect: f64,
    /// max over pairs of |tr(P_j P_k) + m_j/m_k + m_k/m_j|
    pub pair_trace_defect: f64,
    /// distance of the full cyclic product from the identity, minimized
    /// over traversal order and global sign
    pub cyclic_defect: f64,
    /// the cyclic product matched -identity rather than +identity
    pub cyclic_flipped: bool,
    /// the predicted matrices all commute, so the conjugation fit is
    /// underdetermined
    pub degenerate_comparison: bool,
}

fn best_fit_conjugation(
    transported: &[SquareMatrix],
    predicted: &[SquareMatrix],
) -> Result<(SquareMatrix, f64)> {
    // rows of K: entries of C P - N C as linear forms in x[2 col + row] = C[row, col]
    let n = transported.len();
    let mut h = SquareMatrix::zeros(4);
    for idx in 0..n {
        let p = &transported[idx];
        let nj = &predicted[idx];
        let mut k = SquareMatrix::zeros(4);
        for i in 0..2 {
            for jj in 0..2 {
                let row = 2 * jj + i;
                for l in 0..2 {
                    k[(row, 2 * l + i)] += p[(l, jj)];
                    k[(row, 2 * jj + l)] -= nj[(i, l)];
                }
            }
        }
        // H += K^H K
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = C64::default();
                for l in 0..4 {
                    acc += k[(l, r)].conj() * k[(l, c)];
                }
                h[(r, c)] += acc;
            }
        }
    }
    // inverse iteration toward the smallest eigenvector
    let trace_scale = h.trace().norm() / 4.0;
    let mut x = vec![cr(1.0), cr(0.3), cr(-0.2), cr(0.1)];
    let mut solved = false;
    for shift in [1e-12, 1e-10, 1e-8, 1e-6] {
        let mut hs = h.clone();
        for i in 0..4 {
            hs[(i, i)] -= cr(shift * trace_scale.max(1e-300));
        }
        if let Ok((_, inv)) = det_inv(&hs) {
            for _ in 0..40 {
                let y = inv.apply(&x);
                let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                if !norm.is_finite() || norm == 0.0 {
                    break;
                }
                x = y.into_iter().map(|v| v / cr(norm)).collect();
                solved = true;
            }
            if solved {
                break;
            }
        }
    }
    if !solved {
        return Err(Error::SingularMatrix {
            det_abs: 0.0,
            threshold: 0.0,
        });
    }
    let mut c = mat2(x[0], x[2], x[1], x[3]);
    let det = c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)];
    if det.norm() > 1e-12 {
        let root = det.sqrt();
        c = c.scale(cr(1.0) / root);
    }
    let (_, c_inv) = det_inv(&c)?;
    let mut defect = 0.0f64;
    for idx in 0..n {
        let conj = &(&c * &transported[idx]) * &c_inv;
        defect = defect.max(conj.max_diff(&predicted[idx]));
    }
    Ok((c, defect))
}

/// Transports every loop and compares with the multiplier formulas.
pub fn verify_monodromies(
    solution: &SchlesingerSolution,
    opts: &TransportOptions,
) -> Result<MonodromyReport> {
    let cfg = &solution.cfg;
    let n = cfg.num_points();
    let transported: Vec<SquareMatrix> =
        crate::num::map_ordered((0..n).collect(), |j| {
            transport_monodromy(cfg, &solution.a, j, opts)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let predicted = monodromy_matrices(&solution.characteristic)?;
    let multipliers = monodromy_multipliers(&solution.characteristic)?;

    let mut trace_defect = 0.0f64;
    let mut eigenvalue_defect = 0.0f64;
    for p in &transported {
        trace_defect = trace_defect.max(p.trace().norm());
        let (l1, l2) = eig2(p);
        let d1 = (l1 - I).norm().max((l2 + I).norm());
        let d2 = (l2 - I).norm().max((l1 + I).norm());
        eigenvalue_defect = eigenvalue_defect.max(d1.min(d2));
    }
    let mut pair_trace_defect = 0.0f64;
    for j in 0..n {
        for k in (j + 1)..n {
            let t = (&transported[j] * &transported[k]).trace();
            let expected = -(multipliers[j] / multipliers[k] + multipliers[k] / multipliers[j]);
            pair_trace_defect = pair_trace_defect.max((t - expected).norm());
        }
    }

    let identity = SquareMatrix::identity(2);
    let mut cyclic_defect = f64::INFINITY;
    let mut cyclic_flipped = false;
    for order_rev in [false, true] {
        let mut prod = identity.clone();
        for j in 0..n {
            let idx = if order_rev { n - 1 - j } else { j };
            prod = &prod * &transported[idx];
        }
        for (sign, flipped) in [(1.0, false), (-1.0, true)] {
            let d = prod.max_diff(&identity.scale(cr(sign)));
            if d < cyclic_defect {
                cyclic_defect = d;
                cyclic_flipped = flipped;
            }
        }
    }

    let mut degenerate = true;
    'outer: for j in 0..n {
        for k in (j + 1)..n {
            if predicted[j].commutator(&predicted[k]).max_norm() > 1e-10 {
                degenerate = false;
                break 'outer;
            }
        }
    }
    let (conjugation, conjugation_defect) = best_fit_conjugation(&transported, &predicted)?;

    Ok(MonodromyReport {
        transported,
        predicted,
        conjugation,
        conjugation_defect,
        trace_defect,
        eigenvalue_defect,
        pair_trace_defect,
        cyclic_defect,
        cyclic_flipped,
        degenerate_comparison: degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::c64;
    use crate::schlesinger::solve;
    use crate::theta::Characteristic;
    use crate::num::QuadratureSpec;

    fn real_config(vals: &[f64]) -> BranchConfiguration {
        BranchConfiguration::new(vals.iter().map(|&x| cr(x)).collect()).unwrap()
    }

    #[test]
    fn zero_connection_transports_to_identity() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let a = vec![SquareMatrix::zeros(2); 4];
        let m = transport_monodromy(&cfg, &a, 1, &TransportOptions::default()).unwrap();
        assert!(m.max_diff(&SquareMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn single_pole_gives_diagonal_exponential() {
        // residue sigma_3 / 4 at one point, zero elsewhere: the loop
        // monodromy is exp(2 pi i sigma_3 / 4) = diag(i, -i)
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let mut a = vec![SquareMatrix::zeros(2); 4];
        a[2] = mat2(cr(0.25), C64::default(), C64::default(), cr(-0.25));
        let m = transport_monodromy(&cfg, &a, 2, &TransportOptions::default()).unwrap();
        let expected = mat2(I, C64::default(), C64::default(), -I);
        assert!(m.max_diff(&expected) < 1e-8, "defect {:.3e}", m.max_diff(&expected));
        // a loop around a different point sees no residue at all
        let m0 = transport_monodromy(&cfg, &a, 0, &TransportOptions::default()).unwrap();
        assert!(m0.max_diff(&SquareMatrix::identity(2)) < 1e-8);
    }

    #[test]
    fn transport_is_homotopy_invariant() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let ch = Characteristic::from_real(&[0.31], &[0.17]).unwrap();
        let sol = solve(&cfg, &ch, &QuadratureSpec::default()).unwrap();
        let legs_small = loop_legs(&cfg, 1).unwrap();
        // same loop with a bigger circle, still clear of the neighbors
        let legs_big: Vec<PathLeg> = legs_small
            .iter()
            .map(|leg| match *leg {
                PathLeg::Arc { center, radius, start, end } => PathLeg::Arc {
                    center,
                    radius: radius * 1.4,
                    start,
                    end,
                },
                PathLeg::Line { from, to } => {
                    // stretch the descent to the new entry height
                    let stretch = |p: C64| {
                        if (p - (cfg.points()[1] + I * cr(0.25))).norm() < 1e-12 {
                            cfg.points()[1] + I * cr(0.35)
                        } else {
                            p
                        }
                    };
                    PathLeg::Line { from: stretch(from), to: stretch(to) }
                }
            })
            .collect();
        let opts = TransportOptions::default();
        let m1 = transport_along(&legs_small, cfg.points(), &sol.a, &opts).unwrap();
        let m2 = transport_along(&legs_big, cfg.points(), &sol.a, &opts).unwrap();
        assert!(m1.max_diff(&m2) < 1e-8, "defect {:.3e}", m1.max_diff(&m2));
    }

    #[test]
    fn tighter_tolerance_improves_transport() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let ch = Characteristic::from_real(&[0.31], &[0.17]).unwrap();
        let sol = solve(&cfg, &ch, &QuadratureSpec::default()).unwrap();
        let reference = transport_monodromy(
            &cfg,
            &sol.a,
            1,
            &TransportOptions { step_tol: 1e-12, max_steps: 400_000 },
        )
        .unwrap();
        let loose = transport_monodromy(
            &cfg,
            &sol.a,
            1,
            &TransportOptions { step_tol: 1e-5, max_steps: 400_000 },
        )
        .unwrap();
        let tight = transport_monodromy(
            &cfg,
            &sol.a,
            1,
            &TransportOptions { step_tol: 1e-9, max_steps: 400_000 },
        )
        .unwrap();
        let e_loose = loose.max_diff(&reference);
        let e_tight = tight.max_diff(&reference);
        assert!(
            e_tight < e_loose,
            "tight {e_tight:.3e} not better than loose {e_loose:.3e}"
        );
    }

    #[test]
    fn elliptic_family_verifies_against_the_formulas() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let ch = Characteristic::from_real(&[0.31], &[0.17]).unwrap();
        let sol = solve(&cfg, &ch, &QuadratureSpec::default()).unwrap();
        let report = verify_monodromies(&sol, &TransportOptions::default()).unwrap();
        assert!(report.trace_defect < 1e-7, "trace {:.3e}", report.trace_defect);
        assert!(report.eigenvalue_defect < 1e-7, "eig {:.3e}", report.eigenvalue_defect);
        assert!(report.pair_trace_defect < 1e-7, "pair {:.3e}", report.pair_trace_defect);
        assert!(report.cyclic_defect < 1e-7, "cyclic {:.3e}", report.cyclic_defect);
        assert!(
            report.conjugation_defect < 1e-6,
            "conjugation {:.3e}",
            report.conjugation_defect
        );
        assert!(!report.degenerate_comparison);
    }

    #[test]
    fn perturbed_residues_break_verification() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let ch = Characteristic::from_real(&[0.31], &[0.17]).unwrap();
        let mut sol = solve(&cfg, &ch, &QuadratureSpec::default()).unwrap();
        sol.a[0][(0, 1)] += c64(1e-3, 0.0);
        let report = verify_monodromies(&sol, &TransportOptions::default()).unwrap();
        assert!(
            report.conjugation_defect > 1e-4,
            "perturbation went unnoticed: {:.3e}",
            report.conjugation_defect
        );
    }
}
