//! Residue matrices of a rank two isomonodromic family attached to a
//! hyperelliptic curve and a theta characteristic.
//!
//! Each branch point lambda_j carries a 2x2 residue A_j with eigenvalues
//! +-1/4 and sum_j A_j = 0; the family satisfies the Schlesinger system in
//! the branch points. The matrices come from a 2x2 frame of theta quotients
//! evaluated at the Abel images of the two points over infinity. Attached
//! to the same data: the traces-over-gaps Hamiltonians, their closed theta
//! form, the tau function, and the loop multipliers of the monodromy
//! representation.

use crate::curve::{
    abel_at_branch_closed, branch_point_halfunits, diff_at_branch, half_characteristic,
    period_matrices, u_infinity, BranchConfiguration, PeriodData,
};
use crate::error::{Error, Result};
use crate::num::{cr, det_inv, eig2, mat2, QuadratureSpec, SquareMatrix, C64, I};
use crate::theta::{theta_with, Characteristic};

use std::f64::consts::PI;

/// A solved isomonodromic family: the curve, the characteristic, the period
/// data, the Abel image of infinity on sheet 1, and one residue matrix per
/// branch point.
#[derive(Clone, Debug)]
pub struct SchlesingerSolution {
    pub cfg: BranchConfiguration,
    pub characteristic: Characteristic,
    pub periods: PeriodData,
    pub u_inf: Vec<C64>,
    pub a: Vec<SquareMatrix>,
    /// series and quadrature tolerance the solve ran with
    pub tol: f64,
}

/// Default support subset for the frame at branch point j: the greatest
/// g - 1 indices different from j. The residues do not depend on this
/// choice as long as it avoids j itself and the Abel base point (index 0);
/// subsets through the base point degenerate.
pub fn default_frame_subset(num_points: usize, j: usize) -> Vec<usize> {
    let g = num_points / 2 - 1;
    let mut out = Vec::new();
    let mut idx = num_points;
    while out.len() + 1 < g && idx > 0 {
        idx -= 1;
        if idx != j {
            out.push(idx);
        }
    }
    out.reverse();
    out
}

fn add_vec(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

fn sub_vec(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

fn scale_vec(x: &[C64], s: C64) -> Vec<C64> {
    x.iter().map(|a| a * s).collect()
}

/// Solves the family with the default frame subsets.
pub fn solve(
    cfg: &BranchConfiguration,
    ch: &Characteristic,
    spec: &QuadratureSpec,
) -> Result<SchlesingerSolution> {
    let subsets: Vec<Vec<usize>> = (0..cfg.num_points())
        .map(|j| default_frame_subset(cfg.num_points(), j))
        .collect();
    solve_with_subsets(cfg, ch, &subsets, spec)
}

/// Solves the family with caller supplied frame subsets, one per branch
/// point, each of size g - 1 and avoiding its own point.
pub fn solve_with_subsets(
    cfg: &BranchConfiguration,
    ch: &Characteristic,
    subsets: &[Vec<usize>],
    spec: &QuadratureSpec,
) -> Result<SchlesingerSolution> {
    let g = cfg.genus();
    let n = cfg.num_points();
    if ch.genus() != g {
        return Err(Error::Invalid(format!(
            "characteristic genus {} does not match curve genus {g}",
            ch.genus()
        )));
    }
    if ch.is_half_integer() {
        return Err(Error::ReducibleCharacteristic);
    }
    if subsets.len() != n {
        return Err(Error::Invalid(format!(
            "expected {n} frame subsets, got {}",
            subsets.len()
        )));
    }
    let tol = spec.tol;
    let periods = period_matrices(cfg, spec)?;
    let u_inf = u_infinity(cfg, &periods, 1, spec)?;
    let zero = vec![C64::default(); g];
    let theta0 = theta_with(&zero, &periods.b, ch, tol)?.value;
    if theta0.norm() < 1e-12 {
        return Err(Error::DivisorSingularity {
            which: "theta constant of the characteristic",
        });
    }

    let two_pi_i = I * cr(2.0 * PI);
    let sigma3 = mat2(cr(1.0), C64::default(), C64::default(), cr(-1.0));
    let mut a = Vec::with_capacity(n);
    for j in 0..n {
        let subset = &subsets[j];
        if subset.len() + 1 != g || subset.contains(&j) {
            return Err(Error::BadSubset {
                expected: g - 1,
                got: subset.len(),
            });
        }
        if subset.contains(&0) {
            return Err(Error::Invalid(format!(
                "frame subset for branch point {j} contains the Abel base point"
            )));
        }
        let odd_ch = half_characteristic(cfg, subset)?;
        let u_j = abel_at_branch_closed(&periods, j);
        let (bvec, _) = branch_point_halfunits(g, j);
        let v: Vec<C64> = (0..g)
            .map(|k| diff_at_branch(cfg, &periods, j, k) * cr(0.5))
            .collect();

        let mut f = SquareMatrix::zeros(2);
        for (row, sign) in [(0usize, -1.0), (1usize, 1.0)] {
            let c = scale_vec(&u_inf, cr(sign));
            let t_pq = theta_with(&add_vec(&u_j, &c), &periods.b, ch, tol)?;
            let t_odd = theta_with(&sub_vec(&u_j, &c), &periods.b, &odd_ch, tol)?;
            let t_den = theta_with(&scale_vec(&c, cr(-2.0)), &periods.b, &odd_ch, tol)?;
            let den = theta0 * t_den.value;
            if den.norm() < 1e-14 {
                return Err(Error::DivisorSingularity {
                    which: "frame denominator",
                });
            }
            let val = t_pq.value * t_odd.value / den;
            let mut dval = C64::default();
            for k in 0..g {
                let series =
                    (t_pq.grad[k] * t_odd.value + t_pq.value * t_odd.grad[k]) / den;
                dval += v[k] * (series + two_pi_i * cr(bvec[k] as f64) * val);
            }
            f[(row, 0)] = val;
            f[(row, 1)] = dval;
        }
        let (det_f, f_inv) = det_inv(&f).map_err(|_| Error::DivisorSingularity {
            which: "frame matrix",
        })?;
        let _ = det_f;
        let prod = &(&f * &sigma3) * &f_inv;
        a.push(prod.scale(cr(-0.25)));
    }

    Ok(SchlesingerSolution {
        cfg: cfg.clone(),
        characteristic: ch.clone(),
        periods,
        u_inf,
        a,
        tol,
    })
}

impl SchlesingerSolution {
    /// Sum of all residues; zero for a consistent family.
    pub fn residue_sum(&self) -> SquareMatrix {
        let mut s = SquareMatrix::zeros(2);
        for a in &self.a {
            s = &s + a;
        }
        s
    }

    /// Hamiltonian H_j = sum_{i != j} tr(A_j A_i) / (lambda_j - lambda_i).
    pub fn hamiltonian(&self, j: usize) -> C64 {
        let pts = self.cfg.points();
        let mut h = C64::default();
        for i in 0..self.a.len() {
            if i == j {
                continue;
            }
            h += (&self.a[j] * &self.a[i]).trace() / (pts[j] - pts[i]);
        }
        h
    }

    pub fn hamiltonians(&self) -> Vec<C64> {
        (0..self.a.len()).map(|j| self.hamiltonian(j)).collect()
    }

    /// Closed theta form of H_j: a rational gap sum plus the difference of
    /// normalized Hessian quadratic forms of an even theta constant and the
    /// characteristic's theta constant, both contracted with the branch
    /// point derivative of the Abel map.
    pub fn hamiltonian_theta(&self, j: usize) -> Result<C64> {
        let g = self.cfg.genus();
        let n = self.cfg.num_points();
        let zero = vec![C64::default(); g];
        // even subset of size g + 1 with the largest theta constant
        let mut best: Option<(Vec<usize>, C64)> = None;
        for t in combinations(n, g + 1) {
            let ch_t = half_characteristic(&self.cfg, &t)?;
            let v = theta_with(&zero, &self.periods.b, &ch_t, self.tol)?.value;
            if best.as_ref().map(|(_, bv)| v.norm() > bv.norm()).unwrap_or(true) {
                best = Some((t, v));
            }
        }
        let (t_subset, theta_t) = best.ok_or(Error::DivisorSingularity {
            which: "even theta constants",
        })?;
        if theta_t.norm() < 1e-10 {
            return Err(Error::DivisorSingularity {
                which: "even theta constants",
            });
        }
        let ch_t = half_characteristic(&self.cfg, &t_subset)?;
        let d: Vec<C64> = (0..g)
            .map(|l| diff_at_branch(&self.cfg, &self.periods, j, l))
            .collect();
        let quad = |hess: &SquareMatrix| -> C64 {
            let mut q = C64::default();
            for l in 0..g {
                for k in 0..g {
                    q += hess[(l, k)] * d[l] * d[k];
                }
            }
            q
        };
        let t_val = theta_with(&zero, &self.periods.b, &ch_t, self.tol)?;
        let pq_val = theta_with(&zero, &self.periods.b, &self.characteristic, self.tol)?;
        if pq_val.value.norm() < 1e-12 {
            return Err(Error::DivisorSingularity {
                which: "theta constant of the characteristic",
            });
        }
        let pts = self.cfg.points();
        let in_t = |k: usize| t_subset.contains(&k);
        let nj = if in_t(j) { 1.0 } else { -1.0 };
        let mut gap = C64::default();
        for k in 0..n {
            if k == j {
                continue;
            }
            let nk = if in_t(k) { 1.0 } else { -1.0 };
            gap += cr(nj * nk) / (pts[j] - pts[k]);
        }
        Ok(gap * cr(0.125) - quad(&t_val.hess) / (cr(4.0) * t_val.value)
            + quad(&pq_val.hess) / (cr(4.0) * pq_val.value))
    }

    /// Logarithm of the tau function:
    ///
    ///   ln tau = ln Theta[p, q](0 | B) - ln(det A) / 2
    ///            - sum_{j < k} ln(lambda_k - lambda_j) / 8
    ///
    /// with principal logarithms throughout.
    pub fn ln_tau(&self) -> Result<C64> {
        let g = self.cfg.genus();
        let zero = vec![C64::default(); g];
        let th = theta_with(&zero, &self.periods.b, &self.characteristic, self.tol)?.value;
        if th.norm() < 1e-14 {
            return Err(Error::DivisorSingularity {
                which: "theta constant of the characteristic",
            });
        }
        let pts = self.cfg.points();
        let mut gaps = C64::default();
        for j in 0..pts.len() {
            for k in (j + 1)..pts.len() {
                gaps += (pts[k] - pts[j]).ln();
            }
        }
        Ok(th.ln() - self.periods.det_a.ln() * cr(0.5) - gaps * cr(0.125))
    }
}

/// Max distance of the eigenvalues of a residue candidate from +-1/4.
pub fn eigenvalue_defect(a: &SquareMatrix) -> f64 {
    let (l1, l2) = eig2(a);
    let d1 = (l1 - cr(0.25)).norm().max((l2 + cr(0.25)).norm());
    let d2 = (l2 - cr(0.25)).norm().max((l1 + cr(0.25)).norm());
    d1.min(d2)
}

/// Right hand side of the deformation equations: the derivative of A_j in
/// lambda_i predicted by the commutator structure.
pub fn schlesinger_rhs(a: &[SquareMatrix], points: &[C64], i: usize, j: usize) -> SquareMatrix {
    if i != j {
        a[i].commutator(&a[j]).scale(cr(1.0) / (points[i] - points[j]))
    } else {
        let mut s = SquareMatrix::zeros(2);
        for l in 0..a.len() {
            if l == i {
                continue;
            }
            let term = a[i].commutator(&a[l]).scale(cr(1.0) / (points[i] - points[l]));
            s = &s - &term;
        }
        s
    }
}

/// Max over j of the defect between the central difference of A_j when
/// branch point i moves by +-h and the commutator right hand side.
pub fn deformation_defect(
    cfg: &BranchConfiguration,
    ch: &Characteristic,
    i: usize,
    h: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let center = solve(cfg, ch, spec)?;
    let shifted = |s: f64| -> Result<SchlesingerSolution> {
        let mut pts = cfg.points().to_vec();
        pts[i] += cr(s);
        solve(&BranchConfiguration::new(pts)?, ch, spec)
    };
    let plus = shifted(h)?;
    let minus = shifted(-h)?;
    let mut defect = 0.0f64;
    for j in 0..cfg.num_points() {
        let fd = (&plus.a[j] - &minus.a[j]).scale(cr(1.0 / (2.0 * h)));
        let rhs = schlesinger_rhs(&center.a, cfg.points(), i, j);
        defect = defect.max(fd.max_diff(&rhs));
    }
    Ok(defect)
}

/// Defect of the derivative identity for the period matrix: the central
/// difference of B in branch point j against pi i d_k d_l, where d is the
/// branch point derivative of the Abel map.
pub fn period_derivative_defect(
    cfg: &BranchConfiguration,
    j: usize,
    h: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let center = period_matrices(cfg, spec)?;
    let g = cfg.genus();
    let shifted = |s: f64| -> Result<PeriodData> {
        let mut pts = cfg.points().to_vec();
        pts[j] += cr(s);
        period_matrices(&BranchConfiguration::new(pts)?, spec)
    };
    let plus = shifted(h)?;
    let minus = shifted(-h)?;
    let d: Vec<C64> = (0..g)
        .map(|l| diff_at_branch(cfg, &center, j, l))
        .collect();
    let mut defect = 0.0f64;
    for k in 0..g {
        for l in 0..g {
            let fd = (plus.b[(k, l)] - minus.b[(k, l)]) / cr(2.0 * h);
            let predicted = I * cr(PI) * d[k] * d[l];
            defect = defect.max((fd - predicted).norm());
        }
    }
    Ok(defect)
}

/// Defect between the central difference of ln tau in branch point j and
/// the Hamiltonian H_j.
pub fn tau_hamiltonian_defect(
    cfg: &BranchConfiguration,
    ch: &Characteristic,
    j: usize,
    h: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let center = solve(cfg, ch, spec)?;
    let shifted = |s: f64| -> Result<C64> {
        let mut pts = cfg.points().to_vec();
        pts[j] += cr(s);
        solve(&BranchConfiguration::new(pts)?, ch, spec)?.ln_tau()
    };
    let fd = (shifted(h)? - shifted(-h)?) / cr(2.0 * h);
    Ok((fd - center.hamiltonian(j)).norm())
}

/// Defect of the cross derivative symmetry dH_k/dlambda_j = dH_j/dlambda_k.
pub fn hamiltonian_cross_defect(
    cfg: &BranchConfiguration,
    ch: &Characteristic,
    j: usize,
    k: usize,
    h: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let ham = |i_move: usize, s: f64, i_eval: usize| -> Result<C64> {
        let mut pts = cfg.points().to_vec();
        pts[i_move] += cr(s);
        Ok(solve(&BranchConfiguration::new(pts)?, ch, spec)?.hamiltonian(i_eval))
    };
    let dhk_dj = (ham(j, h, k)? - ham(j, -h, k)?) / cr(2.0 * h);
    let dhj_dk = (ham(k, h, j)? - ham(k, -h, j)?) / cr(2.0 * h);
    Ok((dhk_dj - dhj_dk).norm())
}

/// Relative defect of the theta constant modulus identity for an even
/// subset of size g + 1:
///
///   |Theta[T](0)|^4 = |det A|^2 |prod gaps inside T| |prod gaps outside T| (2 pi)^(-2g)
pub fn thomae_defect(
    cfg: &BranchConfiguration,
    periods: &PeriodData,
    t_subset: &[usize],
    tol: f64,
) -> Result<f64> {
    let g = cfg.genus();
    if t_subset.len() != g + 1 {
        return Err(Error::BadSubset {
            expected: g + 1,
            got: t_subset.len(),
        });
    }
    let ch = half_characteristic(cfg, t_subset)?;
    let zero = vec![C64::default(); g];
    let th = theta_with(&zero, &periods.b, &ch, tol)?.value;
    let pts = cfg.points();
    let inside = |k: usize| t_subset.contains(&k);
    let mut prod = 1.0f64;
    for l in 0..pts.len() {
        for k in (l + 1)..pts.len() {
            if inside(l) == inside(k) {
                prod *= (pts[l] - pts[k]).norm();
            }
        }
    }
    let lhs = th.norm().powi(4);
    let rhs = periods.det_a.norm_sqr() * prod * (2.0 * PI).powi(-2 * (g as i32));
    Ok((lhs - rhs).abs() / rhs.max(1e-300))
}

/// Loop multipliers m_j of the monodromy representation: the monodromy
/// around branch point j is [[0, m_j], [-1/m_j, 0]] up to a global sign.
/// Half integer characteristics make the representation reducible and are
/// rejected.
pub fn monodromy_multipliers(ch: &Characteristic) -> Result<Vec<C64>> {
    if ch.is_half_integer() {
        return Err(Error::ReducibleCharacteristic);
    }
    let g = ch.genus();
    let two_pi_i = I * cr(2.0 * PI);
    let sign_g = if g % 2 == 0 { 1.0 } else { -1.0 };
    let psum = |from: usize| -> C64 { ch.p[from..].iter().sum() };
    let mut m = Vec::with_capacity(2 * g + 2);
    m.push(I);
    m.push(I * cr(sign_g) * (-two_pi_i * psum(0)).exp());
    for j in 1..=g {
        let qj = ch.q[j - 1];
        m.push(I * cr(-sign_g) * (two_pi_i * (qj - psum(j - 1))).exp());
        m.push(I * cr(sign_g) * (two_pi_i * (qj - psum(j))).exp());
    }
    Ok(m)
}

/// The monodromy matrices themselves, in the same order as the branch
/// points.
pub fn monodromy_matrices(ch: &Characteristic) -> Result<Vec<SquareMatrix>> {
    Ok(monodromy_multipliers(ch)?
        .into_iter()
        .map(|m| mat2(C64::default(), m, -cr(1.0) / m, C64::default()))
        .collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::c64;

    fn real_config(vals: &[f64]) -> BranchConfiguration {
        BranchConfiguration::new(vals.iter().map(|&x| cr(x)).collect()).unwrap()
    }

    fn genus_two_solution() -> SchlesingerSolution {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let ch = Characteristic::from_real(&[0.11, 0.27], &[0.08, 0.21]).unwrap();
        solve(&cfg, &ch, &QuadratureSpec::default()).unwrap()
    }

    #[test]
    fn genus_two_residues_match_pinned_values() {
        let sol = genus_two_solution();
        let check = |a: &SquareMatrix, want: [[C64; 2]; 2]| {
            for r in 0..2 {
                for c in 0..2 {
                    assert!(
                        (a[(r, c)] - want[r][c]).norm() < 1e-8,
                        "entry ({r},{c}): {} vs {}",
                        a[(r, c)],
                        want[r][c]
                    );
                }
            }
        };
        check(
            &sol.a[0],
            [
                [
                    c64(-0.02357112052099027032726, -0.1309896515916382505118),
                    c64(-0.437191895646492881915, -0.111016867876487268838),
                ],
                [
                    c64(-0.166604052234622932469, 0.05643061097340528934362),
                    c64(0.02357112052099027029177, 0.1309896515916382504299),
                ],
            ],
        );
        check(
            &sol.a[2],
            [
                [
                    c64(0.3154151166060349417506, 0.05287870327137342040267),
                    c64(0.2098952242778674799919, -0.1447799881722524399971),
                ],
                [
                    c64(-0.03609710505334988247524, -0.1838232541594858474734),
                    c64(-0.3154151166060349417324, -0.05287870327137342059094),
                ],
            ],
        );
        check(
            &sol.a[4],
            [
                [
                    c64(0.3319741008974767127889, -0.1610213792106485687618),
                    c64(0.2164754657411632443909, -0.1681268830955660151129),
                ],
                [
                    c64(-0.3020037669059615986573, 0.2593130033106515277857),
                    c64(-0.3319741008974767130747, 0.1610213792106485686992),
                ],
            ],
        );
    }

    #[test]
    fn residues_sum_to_zero_and_have_quarter_eigenvalues() {
        let sol = genus_two_solution();
        assert!(sol.residue_sum().max_norm() < 1e-10);
        for a in &sol.a {
            assert!(eigenvalue_defect(a) < 1e-9);
        }
    }

    #[test]
    fn residues_do_not_depend_on_the_frame_subsets() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let ch = Characteristic::from_real(&[0.11, 0.27], &[0.08, 0.21]).unwrap();
        let default = solve(&cfg, &ch, &QuadratureSpec::default()).unwrap();
        let alt: Vec<Vec<usize>> = (0..6).map(|j| vec![if j == 1 { 2 } else { 1 }]).collect();
        let other = solve_with_subsets(&cfg, &ch, &alt, &QuadratureSpec::default()).unwrap();
        for j in 0..6 {
            assert!(
                default.a[j].max_diff(&other.a[j]) < 1e-8,
                "subset dependence at branch point {j}: {:.3e}",
                default.a[j].max_diff(&other.a[j])
            );
        }
        // subsets through the Abel base point are rejected
        let bad: Vec<Vec<usize>> = (0..6).map(|j| vec![if j == 0 { 1 } else { 0 }]).collect();
        assert!(matches!(
            solve_with_subsets(&cfg, &ch, &bad, &QuadratureSpec::default()),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn half_integer_characteristics_are_rejected() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let ch = Characteristic::from_real(&[0.5], &[0.0]).unwrap();
        assert!(matches!(
            solve(&cfg, &ch, &QuadratureSpec::default()),
            Err(Error::ReducibleCharacteristic)
        ));
        assert!(matches!(
            monodromy_multipliers(&ch),
            Err(Error::ReducibleCharacteristic)
        ));
    }

    #[test]
    fn elliptic_hamiltonian_matches_pinned_value() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let ch = Characteristic::from_real(&[0.31], &[0.17]).unwrap();
        let sol = solve(&cfg, &ch, &QuadratureSpec::default()).unwrap();
        let h2 = sol.hamiltonian(1);
        let want = c64(0.124873570203528, -0.0965332248947025);
        assert!((h2 - want).norm() < 5e-10, "H_2 = {h2}, want {want}");
    }

    #[test]
    fn hamiltonian_theta_form_agrees_with_trace_form() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let ch = Characteristic::from_real(&[0.31], &[0.17]).unwrap();
        let sol = solve(&cfg, &ch, &QuadratureSpec::default()).unwrap();
        for j in 0..4 {
            let trace = sol.hamiltonian(j);
            let theta = sol.hamiltonian_theta(j).unwrap();
            assert!(
                (trace - theta).norm() < 1e-8,
                "H_{j}: trace {trace} vs theta {theta}"
            );
        }
    }

    #[test]
    fn tau_derivative_is_the_hamiltonian() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let ch = Characteristic::from_real(&[0.31], &[0.17]).unwrap();
        let d = tau_hamiltonian_defect(&cfg, &ch, 2, 1e-4, &QuadratureSpec::default()).unwrap();
        assert!(d < 1e-7, "tau-Hamiltonian defect {d:.3e}");
    }

    #[test]
    fn deformation_equations_hold_in_finite_differences() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let ch = Characteristic::from_real(&[0.31], &[0.17]).unwrap();
        let d = deformation_defect(&cfg, &ch, 2, 1e-4, &QuadratureSpec::default()).unwrap();
        assert!(d < 1e-6, "deformation defect {d:.3e}");
    }

    #[test]
    fn period_derivative_identity_holds() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let d = period_derivative_defect(&cfg, 3, 1e-4, &QuadratureSpec::default()).unwrap();
        assert!(d < 1e-7, "period derivative defect {d:.3e}");
        // pinned dB/dlambda_j: +0.1842519542 i at the first branch point,
        // the negative of that at the last one
        let periods = period_matrices(&cfg, &QuadratureSpec::default()).unwrap();
        let d0 = diff_at_branch(&cfg, &periods, 0, 0);
        let d3 = diff_at_branch(&cfg, &periods, 3, 0);
        assert!((I * cr(PI) * d0 * d0 - c64(0.0, 0.1842519542)).norm() < 1e-9);
        assert!((I * cr(PI) * d3 * d3 - c64(0.0, -0.1842519542)).norm() < 1e-9);
    }

    #[test]
    fn thomae_identity_holds() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let periods = period_matrices(&cfg, &QuadratureSpec::default()).unwrap();
        for t in [[0usize, 1, 2], [0, 1, 3], [1, 2, 4]] {
            let d = thomae_defect(&cfg, &periods, &t, 1e-12).unwrap();
            assert!(d < 1e-9, "thomae defect for {t:?}: {d:.3e}");
        }
    }

    #[test]
    fn multipliers_have_the_expected_structure() {
        let ch = Characteristic::from_real(&[0.31], &[0.17]).unwrap();
        let m = monodromy_multipliers(&ch).unwrap();
        assert_eq!(m.len(), 4);
        assert!((m[0] - I).norm() < 1e-15);
        // |m_j| = 1 for real characteristics
        for v in &m {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        let mats = monodromy_matrices(&ch).unwrap();
        for (mat, mult) in mats.iter().zip(&m) {
            assert!((mat[(0, 1)] - mult).norm() < 1e-15);
            // trace zero, determinant one, square = -identity
            assert!(mat.trace().norm() < 1e-15);
            let sq = mat * mat;
            assert!((sq[(0, 0)] + cr(1.0)).norm() < 1e-12);
            assert!((sq[(1, 1)] + cr(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn default_subsets_avoid_their_own_point() {
        for n in [4usize, 6, 8] {
            let g = n / 2 - 1;
            for j in 0..n {
                let s = default_frame_subset(n, j);
                assert_eq!(s.len(), g - 1);
                assert!(!s.contains(&j));
            }
        }
    }
}
