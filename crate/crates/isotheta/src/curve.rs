//! Hyperelliptic curves w^2 = prod (lambda - lambda_k) over 2g + 2 finite
//! branch points: configuration geometry, the two sheeted square root,
//! period matrices, Abel maps and Riemann constants.
//!
//! Conventions, fixed crate-wide:
//!
//! * Branch points keep their input order; cut i joins points 2i and 2i+1.
//! * w is a product of per-cut factors
//!     s_i(lambda) = (lambda - c_i) * sqrt((lambda - a_i)(lambda - b_i) / (lambda - c_i)^2)
//!   with principal square roots, so sheet 1 has w ~ +lambda^(g+1) for large
//!   real lambda. The ratio form stays well conditioned near branch points.
//! * On cut i itself the collapsed factor is i d_i sqrt(1 - u^2), the limit
//!   from the +i d_i side of the cut.
//! * a-cycle j surrounds cut j (j = 1..g). b-cycle j passes through cut 0 and
//!   cut j; the resulting matrix gets the unit upper triangle correction, and
//!   then U(branch point) takes the standard closed half-period form, which
//!   `period_matrices` verifies (flipping an offending b-column if needed).

use crate::error::{Error, Result};
use crate::num::{
    c64, chebyshev_weighted, cr, det_inv, integrate_endpoint_singular, integrate_smooth,
    QuadratureSpec, SquareMatrix, C64, I,
};
use crate::theta::Characteristic;

/// An ordered set of 2g + 2 distinct finite branch points with pairwise
/// disjoint cuts.
#[derive(Clone, Debug)]
pub struct BranchConfiguration {
    points: Vec<C64>,
    genus: usize,
}

/// A point on the two sheeted curve. `sheet` is 1 or 2; sheet 2 negates w.
#[derive(Clone, Copy, Debug)]
pub struct SheetPoint {
    pub lambda: C64,
    pub sheet: u8,
}

impl BranchConfiguration {
    pub fn new(points: Vec<C64>) -> Result<Self> {
        let n = points.len();
        if n < 4 || n % 2 != 0 {
            return Err(Error::BadPointCount { count: n });
        }
        if points.len() > 16 {
            return Err(Error::BadPointCount { count: n });
        }
        if !points.iter().all(|p| p.is_finite()) {
            return Err(Error::Invalid("branch points must be finite".into()));
        }
        let scale = points
            .iter()
            .map(|p| p.norm())
            .fold(1.0, f64::max);
        for i in 0..n {
            for j in (i + 1)..n {
                if (points[i] - points[j]).norm() < 1e-12 * scale {
                    return Err(Error::DuplicateBranchPoints { i, j });
                }
            }
        }
        let cfg = Self {
            genus: n / 2 - 1,
            points,
        };
        for i in 0..=cfg.genus {
            for j in (i + 1)..=cfg.genus {
                let (a1, b1) = cfg.cut(i);
                let (a2, b2) = cfg.cut(j);
                if segments_intersect(a1, b1, a2, b2) {
                    return Err(Error::CutsIntersect { i, j });
                }
            }
        }
        Ok(cfg)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    /// Endpoints of cut i, i in 0..=g.
    pub fn cut(&self, i: usize) -> (C64, C64) {
        (self.points[2 * i], self.points[2 * i + 1])
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                d = d.max((self.points[i] - self.points[j]).norm());
            }
        }
        d
    }

    pub fn min_gap(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                d = d.min((self.points[i] - self.points[j]).norm());
            }
        }
        d
    }

    /// Index of the cut whose interior contains `p`, if any (within
    /// 1e-12 of the segment, relative to the configuration scale).
    fn cut_containing(&self, p: C64) -> Option<usize> {
        let tol = 1e-12 * (1.0 + self.diameter());
        for i in 0..=self.genus {
            let (a, b) = self.cut(i);
            if point_segment_distance(p, a, b) < tol {
                return Some(i);
            }
        }
        None
    }
}

fn cross(o: C64, a: C64, b: C64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
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

/// Proper or touching intersection of closed segments, up to a relative
/// epsilon. Shared endpoints count as intersection (cuts never share
/// endpoints because branch points are distinct).
fn segments_intersect(p1: C64, p2: C64, q1: C64, q2: C64) -> bool {
    let scale = [(p2 - p1).norm(), (q2 - q1).norm(), 1.0]
        .into_iter()
        .fold(0.0f64, f64::max);
    let eps = 1e-12 * scale * scale;
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
    {
        return true;
    }
    let on = |d: f64, a: C64, b: C64, p: C64| {
        d.abs() <= eps
            && p.re >= a.re.min(b.re) - 1e-12 * scale
            && p.re <= a.re.max(b.re) + 1e-12 * scale
            && p.im >= a.im.min(b.im) - 1e-12 * scale
            && p.im <= a.im.max(b.im) + 1e-12 * scale
    };
    on(d1, q1, q2, p1) || on(d2, q1, q2, p2) || on(d3, p1, p2, q1) || on(d4, p1, p2, q2)
}

/// Parameter on segment (a1, b1) where it crosses (a2, b2) strictly in both
/// interiors, or None.
fn segment_crossing_param(a1: C64, b1: C64, a2: C64, b2: C64) -> Option<f64> {
    let r = b1 - a1;
    let s = b2 - a2;
    let denom = r.re * s.im - r.im * s.re;
    let scale = r.norm() * s.norm();
    if denom.abs() < 1e-14 * scale.max(1e-300) {
        return None;
    }
    let qp = a2 - a1;
    let t = (qp.re * s.im - qp.im * s.re) / denom;
    let u = (qp.re * r.im - qp.im * r.re) / denom;
    let eps = 1e-9;
    if t > eps && t < 1.0 - eps && u > eps && u < 1.0 - eps {
        Some(t)
    } else {
        None
    }
}

/// One cut factor of w, in the cancellation-free ratio form.
fn s_factor(lambda: C64, a: C64, b: C64) -> C64 {
    let c = (a + b) * cr(0.5);
    let lc = lambda - c;
    let z = (lambda - a) * (lambda - b) / (lc * lc);
    lc * z.sqrt()
}

/// w(P) on the requested sheet. Fails on cut interiors, where the sheet is
/// ambiguous.
pub fn w_value(cfg: &BranchConfiguration, p: &SheetPoint) -> Result<C64> {
    if p.sheet != 1 && p.sheet != 2 {
        return Err(Error::Invalid(format!("sheet must be 1 or 2, got {}", p.sheet)));
    }
    if let Some(cut) = cfg.cut_containing(p.lambda) {
        // branch point endpoints are fine (w = 0 there), interiors are not
        let (a, b) = cfg.cut(cut);
        let scale = 1.0 + cfg.diameter();
        if (p.lambda - a).norm() > 1e-12 * scale && (p.lambda - b).norm() > 1e-12 * scale {
            return Err(Error::BranchAmbiguity { cut });
        }
    }
    let mut w = cr(1.0);
    for i in 0..=cfg.genus {
        let (a, b) = cfg.cut(i);
        w *= s_factor(p.lambda, a, b);
    }
    Ok(if p.sheet == 2 { -w } else { w })
}

fn w_off_cut(cfg: &BranchConfiguration, lambda: C64) -> C64 {
    let mut w = cr(1.0);
    for i in 0..=cfg.genus {
        let (a, b) = cfg.cut(i);
        w *= s_factor(lambda, a, b);
    }
    w
}

/// Product of the non-collapsed cut factors along cut `cut` at parameter u,
/// for on-cut integration from the +i d side.
fn r_off_factors(cfg: &BranchConfiguration, cut: usize, lambda: C64) -> C64 {
    let mut r = cr(1.0);
    for i in 0..=cfg.genus {
        if i == cut {
            continue;
        }
        let (a, b) = cfg.cut(i);
        r *= s_factor(lambda, a, b);
    }
    r
}

/// Holomorphic period data: the raw a- and b-period matrices of the basis
/// lambda^(k-1) dlambda / w, the normalized Riemann matrix B, and the
/// inverse of the a-matrix (the normalizing change of basis).
#[derive(Clone, Debug)]
pub struct PeriodData {
    pub a_mat: SquareMatrix,
    pub a_inv: SquareMatrix,
    pub det_a: C64,
    pub b_raw: SquareMatrix,
    pub b: SquareMatrix,
    /// max asymmetry of B before symmetrization
    pub symmetry_defect: f64,
}

/// Integral over cut `cut` of lambda^power dlambda / w, single traversal on
/// the +i d side, as a Chebyshev-weighted sum (the collapsed factor cancels
/// the half-width and supplies the weight).
fn on_cut_integral(
    cfg: &BranchConfiguration,
    cut: usize,
    power: usize,
    spec: &QuadratureSpec,
) -> Result<C64> {
    let (a, b) = cfg.cut(cut);
    let c = (a + b) * cr(0.5);
    let d = (b - a) * cr(0.5);
    let g = |u: f64| {
        let lam = c + d * cr(u);
        lam.powu(power as u32) / (I * r_off_factors(cfg, cut, lam))
    };
    let (v, _err) = chebyshev_weighted(g, spec.nodes, spec.tol)?;
    Ok(v)
}

/// Integral over the chord between consecutive branch points `from` and
/// `from + 1` (not a cut) of lambda^power dlambda / w.
fn chord_integral(
    cfg: &BranchConfiguration,
    from: usize,
    power: usize,
    spec: &QuadratureSpec,
) -> Result<C64> {
    let a = cfg.points()[from];
    let b = cfg.points()[from + 1];
    integrate_endpoint_singular(
        |lam| lam.powu(power as u32) / w_off_cut(cfg, lam),
        a,
        b,
        spec,
    )
}

/// Raw integrals of lambda^power dlambda / w along the chain of consecutive
/// branch points from index `from` to index `to` (0 based, from < to).
/// Segments that coincide with cuts use the on-cut rule.
fn chain_integral(
    cfg: &BranchConfiguration,
    from: usize,
    to: usize,
    power: usize,
    spec: &QuadratureSpec,
) -> Result<C64> {
    let mut acc = C64::default();
    for m in from..to {
        acc += if m % 2 == 0 {
            on_cut_integral(cfg, m / 2, power, spec)?
        } else {
            chord_integral(cfg, m, power, spec)?
        };
    }
    Ok(acc)
}

fn build_b_from_raw(a_inv: &SquareMatrix, b_raw: &SquareMatrix) -> SquareMatrix {
    let g = a_inv.order();
    let mut b = a_inv * b_raw;
    for i in 0..g {
        for j in (i + 1)..g {
            b[(i, j)] += cr(1.0);
        }
    }
    b
}

/// Computes the period matrices of the configuration.
///
/// The b-cycle homology is validated against the closed half-period form of
/// the Abel map at the odd branch points; if a column disagrees mod the
/// lattice, its sign is flipped and the check repeated. Symmetry and
/// positive definiteness of Im B are enforced on the result.
pub fn period_matrices(cfg: &BranchConfiguration, spec: &QuadratureSpec) -> Result<PeriodData> {
    let g = cfg.genus();
    let mut a_mat = SquareMatrix::zeros(g);
    for j in 1..=g {
        for k in 0..g {
            // a_j surrounds cut j; the closed loop doubles the one sided pass
            let v = on_cut_integral(cfg, j, k, spec)?;
            a_mat[(k, j - 1)] = cr(-2.0) * v;
        }
    }
    let (det_a, a_inv) = det_inv(&a_mat)?;
    let mut b_raw = SquareMatrix::zeros(g);
    for j in 1..=g {
        for k in 0..g {
            // b_j runs from branch point 2 to branch point 2j + 1 and back
            // through the other sheet, doubling the chain
            let v = chain_integral(cfg, 1, 2 * j, k, spec)?;
            b_raw[(k, j - 1)] = cr(2.0) * v;
        }
    }

    // quadrature Abel maps at the odd branch points, used to validate the
    // b-cycle homology against the closed half-period forms
    let mut u_quad = Vec::with_capacity(g);
    for j in 1..=g {
        let idx = 2 * j; // branch point 2j + 1, 1 based
        let mut raw = Vec::with_capacity(g);
        for k in 0..g {
            raw.push(chain_integral(cfg, 0, idx, k, spec)?);
        }
        u_quad.push(a_inv.apply(&raw));
    }
    let mut best: Option<(SquareMatrix, SquareMatrix, f64)> = None;
    for mask in 0..(1u32 << g) {
        let mut cand = b_raw.clone();
        for j in 0..g {
            if mask >> j & 1 == 1 {
                for k in 0..g {
                    cand[(k, j)] = -cand[(k, j)];
                }
            }
        }
        let b = build_b_from_raw(&a_inv, &cand);
        let mut defect = 0.0f64;
        for j in 1..=g {
            let closed = closed_abel(&b, g, 2 * j);
            let red = lattice_reduce_with(&sub_vec(&u_quad[j - 1], &closed), &b)?;
            defect = defect.max(max_norm_vec(&red));
        }
        match &best {
            Some((_, _, d)) if *d <= defect => {}
            _ => best = Some((cand, b, defect)),
        }
        if best.as_ref().unwrap().2 < 1e-7 {
            break;
        }
    }
    let (b_raw, b, defect) = best.unwrap();
    if defect >= 1e-7 {
        return Err(Error::Invalid(format!(
            "homology validation failed; best closed-form defect {defect:.3e}"
        )));
    }

    let mut sym_defect = 0.0f64;
    for i in 0..g {
        for j in (i + 1)..g {
            sym_defect = sym_defect.max((b[(i, j)] - b[(j, i)]).norm());
        }
    }
    if sym_defect > 1e-8 {
        return Err(Error::AsymmetricPeriodMatrix { defect: sym_defect });
    }
    // positive definiteness of Im B through a Cholesky pass on the
    // symmetrized imaginary part
    {
        let mut chol = vec![0.0; g * g];
        for i in 0..g {
            for j in 0..g {
                chol[i * g + j] = 0.5 * (b[(i, j)].im + b[(j, i)].im);
            }
        }
        for i in 0..g {
            for j in 0..=i {
                let mut sum = chol[i * g + j];
                for k in 0..j {
                    sum -= chol[i * g + k] * chol[j * g + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::NotPositiveDefinite);
                    }
                    chol[i * g + i] = sum.sqrt();
                } else {
                    chol[i * g + j] = sum / chol[j * g + j];
                }
            }
        }
    }

    Ok(PeriodData {
        a_mat,
        a_inv,
        det_a,
        b_raw,
        b,
        symmetry_defect: sym_defect,
    })
}

fn sub_vec(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

fn max_norm_vec(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Half-unit integer representation (bvec, nvec) of the Abel image of
/// branch point `idx` (0 based): U = (B bvec + nvec) / 2.
pub fn branch_point_halfunits(g: usize, idx: usize) -> (Vec<i64>, Vec<i64>) {
    let mut bvec = vec![0i64; g];
    let mut nvec = vec![0i64; g];
    match idx {
        0 => {}
        1 => {
            for v in nvec.iter_mut() {
                *v = 1;
            }
        }
        _ => {
            let j = idx / 2; // cut index, 1 based among 1..=g
            bvec[j - 1] = 1;
            let start = if idx % 2 == 0 { j } else { j + 1 };
            for k in start..=g {
                nvec[k - 1] = 1;
            }
        }
    }
    (bvec, nvec)
}

fn closed_abel(b: &SquareMatrix, g: usize, idx: usize) -> Vec<C64> {
    let (bvec, nvec) = branch_point_halfunits(g, idx);
    (0..g)
        .map(|k| {
            let mut acc = cr(nvec[k] as f64);
            for l in 0..g {
                acc += b[(k, l)] * cr(bvec[l] as f64);
            }
            acc * cr(0.5)
        })
        .collect()
}

/// Closed half-period form of the Abel map at branch point `idx`.
pub fn abel_at_branch_closed(periods: &PeriodData, idx: usize) -> Vec<C64> {
    closed_abel(&periods.b, periods.b.order(), idx)
}

/// Abel map at branch point `idx` by quadrature along the branch point
/// chain from the base point (index 0).
pub fn abel_at_branch_quadrature(
    cfg: &BranchConfiguration,
    periods: &PeriodData,
    idx: usize,
    spec: &QuadratureSpec,
) -> Result<Vec<C64>> {
    if idx >= cfg.num_points() {
        return Err(Error::Invalid(format!("branch point index {idx} out of range")));
    }
    let g = cfg.genus();
    let mut raw = Vec::with_capacity(g);
    for k in 0..g {
        raw.push(chain_integral(cfg, 0, idx, k, spec)?);
    }
    Ok(periods.a_inv.apply(&raw))
}

/// Vector of Riemann constants: K = (B 1 + (1, 2, .., g)) / 2.
pub fn riemann_constants(periods: &PeriodData) -> Vec<C64> {
    let g = periods.b.order();
    (0..g)
        .map(|k| {
            let mut acc = cr((k + 1) as f64);
            for l in 0..g {
                acc += periods.b[(k, l)];
            }
            acc * cr(0.5)
        })
        .collect()
}

/// Half characteristic attached to a subset of branch points: the theta
/// characteristic [p, q] with B p + q = sum of Abel images over the subset
/// minus the Riemann constants, reduced mod 1 into {0, 1/2}.
///
/// Subsets of size g - 1 give odd characteristics, subsets of size g + 1
/// give even ones (counted with the right multiplicity).
pub fn half_characteristic(cfg: &BranchConfiguration, subset: &[usize]) -> Result<Characteristic> {
    let g = cfg.genus();
    let n = cfg.num_points();
    let mut seen = vec![false; n];
    for &i in subset {
        if i >= n {
            return Err(Error::Invalid(format!("branch point index {i} out of range")));
        }
        if seen[i] {
            return Err(Error::Invalid(format!("branch point index {i} repeated in subset")));
        }
        seen[i] = true;
    }
    let mut pb = vec![0i64; g];
    let mut qn = vec![0i64; g];
    for &i in subset {
        let (bv, nv) = branch_point_halfunits(g, i);
        for k in 0..g {
            pb[k] += bv[k];
            qn[k] += nv[k];
        }
    }
    // subtract the Riemann constants (bvec = all ones, nvec = (1, .., g))
    for k in 0..g {
        pb[k] -= 1;
        qn[k] -= (k + 1) as i64;
    }
    let p: Vec<f64> = pb.iter().map(|&x| x.rem_euclid(2) as f64 / 2.0).collect();
    let q: Vec<f64> = qn.iter().map(|&x| x.rem_euclid(2) as f64 / 2.0).collect();
    Characteristic::from_real(&p, &q)
}

/// Removes the nearest lattice vector n + B m (n, m integer) from x and
/// returns the remainder.
pub fn lattice_reduce(x: &[C64], b: &SquareMatrix) -> Result<Vec<C64>> {
    lattice_reduce_with(x, b)
}

fn lattice_reduce_with(x: &[C64], b: &SquareMatrix) -> Result<Vec<C64>> {
    let g = b.order();
    // solve x = alpha + B beta for real alpha, beta: beta from Im, then alpha
    let mut im_b = SquareMatrix::zeros(g);
    for i in 0..g {
        for j in 0..g {
            im_b[(i, j)] = cr(b[(i, j)].im);
        }
    }
    let (_, im_inv) = det_inv(&im_b)?;
    let im_x: Vec<C64> = x.iter().map(|v| cr(v.im)).collect();
    let beta: Vec<f64> = im_inv.apply(&im_x).iter().map(|v| v.re).collect();
    let alpha: Vec<f64> = (0..g)
        .map(|k| {
            let mut acc = x[k].re;
            for l in 0..g {
                acc -= b[(k, l)].re * beta[l];
            }
            acc
        })
        .collect();
    let m: Vec<f64> = beta.iter().map(|v| v.round()).collect();
    let n: Vec<f64> = alpha.iter().map(|v| v.round()).collect();
    Ok((0..g)
        .map(|k| {
            let mut acc = x[k] - cr(n[k]);
            for l in 0..g {
                acc -= b[(k, l)] * cr(m[l]);
            }
            acc
        })
        .collect())
}

/// Optional routing data for `abel_map`: waypoints between the base branch
/// point and the target, and whether cut crossings along the way are
/// declared (each crossing switches the sheet of the integrand).
#[derive(Clone, Debug, Default)]
pub struct PathHint {
    pub waypoints: Vec<C64>,
    pub declared_crossings: bool,
}

/// Abel map of a sheet point, integrating from branch point 0 along the
/// polyline base -> waypoints -> P. The first leg handles the inverse
/// square root at the base; later legs must stay clear of branch points.
/// Undeclared cut crossings fail with `PathCrossesCut`.
pub fn abel_map(
    cfg: &BranchConfiguration,
    periods: &PeriodData,
    p: &SheetPoint,
    hint: Option<&PathHint>,
    spec: &QuadratureSpec,
) -> Result<Vec<C64>> {
    if p.sheet != 1 && p.sheet != 2 {
        return Err(Error::Invalid(format!("sheet must be 1 or 2, got {}", p.sheet)));
    }
    if let Some(cut) = cfg.cut_containing(p.lambda) {
        return Err(Error::BranchAmbiguity { cut });
    }
    let g = cfg.genus();
    let base = cfg.points()[0];
    let mut nodes = vec![base];
    if let Some(h) = hint {
        nodes.extend_from_slice(&h.waypoints);
    }
    nodes.push(p.lambda);
    let declared = hint.map(|h| h.declared_crossings).unwrap_or(false);

    let mut raw = vec![C64::default(); g];
    let mut sheet_sign = cr(1.0);
    for (leg, pair) in nodes.windows(2).enumerate() {
        let (from, to) = (pair[0], pair[1]);
        // collect interior crossings with every cut
        let mut crossings: Vec<(f64, usize)> = Vec::new();
        for cut in 0..=g {
            let (a, b) = cfg.cut(cut);
            if let Some(t) = segment_crossing_param(from, to, a, b) {
                crossings.push((t, cut));
            }
        }
        crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
        if !crossings.is_empty() {
            if leg == 0 {
                return Err(Error::PathCrossesCut { cut: crossings[0].1 });
            }
            if !declared {
                return Err(Error::PathCrossesCut { cut: crossings[0].1 });
            }
        }
        let mut params = vec![0.0];
        params.extend(crossings.iter().map(|c| c.0));
        params.push(1.0);
        for window in params.windows(2) {
            let (t0, t1) = (window[0], window[1]);
            let a = from + (to - from) * cr(t0);
            let b = from + (to - from) * cr(t1);
            let sign = sheet_sign;
            for (k, slot) in raw.iter_mut().enumerate() {
                let v = if leg == 0 && t0 == 0.0 {
                    // base leg: t^2 substitution absorbs the inverse sqrt at the
                    // branch point, then the integrand is analytic
                    let dir = b - a;
                    integrate_smooth(
                        |t| {
                            let lam = a + dir * (t * t);
                            lam.powu(k as u32) / w_off_cut(cfg, lam) * (cr(2.0) * dir * t)
                        },
                        cr(0.0),
                        cr(1.0),
                        spec.tol,
                    )?
                } else {
                    integrate_smooth(
                        |lam| lam.powu(k as u32) / w_off_cut(cfg, lam),
                        a,
                        b,
                        spec.tol,
                    )?
                };
                *slot += sign * v;
            }
            if t1 < 1.0 {
                sheet_sign = -sheet_sign;
            }
        }
    }
    let mut u = periods.a_inv.apply(&raw);
    if p.sheet == 2 {
        for v in u.iter_mut() {
            *v = -*v;
        }
    }
    Ok(u)
}

/// Abel map of the point at infinity on the requested sheet, integrating
/// from branch point 0 up to a clear anchor and then along a ray to
/// infinity. Fails if no candidate direction avoids the cuts.
pub fn u_infinity(
    cfg: &BranchConfiguration,
    periods: &PeriodData,
    sheet: u8,
    spec: &QuadratureSpec,
) -> Result<Vec<C64>> {
    if sheet != 1 && sheet != 2 {
        return Err(Error::Invalid(format!("sheet must be 1 or 2, got {sheet}")));
    }
    let g = cfg.genus();
    let base = cfg.points()[0];
    let diam = cfg.diameter();
    let dirs = [
        c64(0.0, 1.0),
        c64(0.0, -1.0),
        c64(-0.7071067811865476, 0.7071067811865476),
        c64(0.7071067811865476, 0.7071067811865476),
        c64(-1.0, 0.0),
    ];
    let mut chosen = None;
    'outer: for dir_unit in dirs {
        let anchor = base + dir_unit * cr(0.25 * diam);
        let far = anchor + dir_unit * cr(1e4 * diam);
        for cut in 0..=g {
            let (a, b) = cfg.cut(cut);
            if segment_crossing_param(base, anchor, a, b).is_some()
                || segment_crossing_param(anchor, far, a, b).is_some()
            {
                continue 'outer;
            }
        }
        chosen = Some((anchor, dir_unit * cr(diam)));
        break;
    }
    let (anchor, dir) = chosen.ok_or_else(|| {
        Error::Invalid("no ray to infinity clears the branch cuts".into())
    })?;

    let mut raw = vec![C64::default(); g];
    for (k, slot) in raw.iter_mut().enumerate() {
        // leg 1: base to anchor with the t^2 substitution at the base
        let leg_dir = anchor - base;
        let v1 = integrate_smooth(
            |t| {
                let lam = base + leg_dir * (t * t);
                lam.powu(k as u32) / w_off_cut(cfg, lam) * (cr(2.0) * leg_dir * t)
            },
            cr(0.0),
            cr(1.0),
            spec.tol,
        )?;
        // leg 2: anchor to infinity along lambda = anchor + dir t / (1 - t);
        // the integrand extends analytically to t = 1 because the form
        // decays like lambda^(k - g - 1)
        let v2 = integrate_smooth(
            |t| {
                let omt = cr(1.0) - t;
                let lam = anchor + dir * t / omt;
                let dlam = dir / (omt * omt);
                lam.powu(k as u32) / w_off_cut(cfg, lam) * dlam
            },
            cr(0.0),
            cr(1.0),
            spec.tol,
        )?;
        *slot = v1 + v2;
    }
    let mut u = periods.a_inv.apply(&raw);
    if sheet == 2 {
        for v in u.iter_mut() {
            *v = -*v;
        }
    }
    Ok(u)
}

/// Directional derivative of the normalized Abel map at branch point j:
///
///   dU_l / dx_j = 2 sum_m (A^-1)[l, m] lambda_j^m / sqrt(prod_{k != j} (lambda_j - lambda_k))
///
/// with the principal square root of the product.
pub fn diff_at_branch(cfg: &BranchConfiguration, periods: &PeriodData, j: usize, l: usize) -> C64 {
    let g = cfg.genus();
    let lam = cfg.points()[j];
    let mut prod = cr(1.0);
    for (k, &p) in cfg.points().iter().enumerate() {
        if k != j {
            prod *= lam - p;
        }
    }
    let root = prod.sqrt();
    let mut acc = C64::default();
    for m in 0..g {
        acc += periods.a_inv[(l, m)] * lam.powu(m as u32);
    }
    acc * cr(2.0) / root
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::c64;
    use approx::assert_abs_diff_eq;

    fn real_config(vals: &[f64]) -> BranchConfiguration {
        BranchConfiguration::new(vals.iter().map(|&x| cr(x)).collect()).unwrap()
    }

    #[test]
    fn validation_rejects_bad_input() {
        assert!(matches!(
            BranchConfiguration::new(vec![cr(0.0), cr(1.0)]),
            Err(Error::BadPointCount { count: 2 })
        ));
        assert!(matches!(
            BranchConfiguration::new(vec![cr(0.0), cr(1.0), cr(0.0), cr(3.0)]),
            Err(Error::DuplicateBranchPoints { i: 0, j: 2 })
        ));
        // crossing cuts: [0, 1] and a vertical segment through 0.5
        assert!(matches!(
            BranchConfiguration::new(vec![
                cr(0.0),
                cr(1.0),
                c64(0.5, -0.5),
                c64(0.5, 0.5)
            ]),
            Err(Error::CutsIntersect { i: 0, j: 1 })
        ));
    }

    #[test]
    fn sheet_square_root_squares_back() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let p = SheetPoint { lambda: cr(10.0), sheet: 1 };
        let w = w_value(&cfg, &p).unwrap();
        // w^2 = 10 * 9 * 8 * 7 = 5040, positive branch at large real lambda
        assert_abs_diff_eq!((w * w).re, 5040.0, epsilon = 1e-9);
        assert!(w.re > 0.0);
        let p2 = SheetPoint { lambda: cr(10.0), sheet: 2 };
        assert_abs_diff_eq!((w_value(&cfg, &p2).unwrap() + w).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn on_cut_evaluation_is_rejected() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let p = SheetPoint { lambda: cr(0.5), sheet: 1 };
        assert!(matches!(w_value(&cfg, &p), Err(Error::BranchAmbiguity { cut: 0 })));
    }

    #[test]
    fn elliptic_modulus_of_equally_spaced_points() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let periods = period_matrices(&cfg, &QuadratureSpec::default()).unwrap();
        // pinned: B = sigma_0 for this configuration
        assert_abs_diff_eq!(periods.b[(0, 0)].re, 0.0, epsilon = 1e-11);
        assert_abs_diff_eq!(
            periods.b[(0, 0)].im,
            1.27926157117100646630,
            epsilon = 1e-11
        );
        // raw a period, pinned against an independent 50 digit evaluation
        assert_abs_diff_eq!(periods.a_mat[(0, 0)].re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            periods.a_mat[(0, 0)].im,
            2.0 * 1.6857503548125960271,
            epsilon = 1e-11
        );
    }

    #[test]
    fn genus_two_periods_match_pinned_values() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let periods = period_matrices(&cfg, &QuadratureSpec::default()).unwrap();
        let a = &periods.a_mat;
        assert_abs_diff_eq!(a[(0, 0)].im, -1.743125803992259710944899, epsilon = 1e-11);
        assert_abs_diff_eq!(a[(0, 1)].im, 0.8715629019961298554724497, epsilon = 1e-11);
        assert_abs_diff_eq!(a[(1, 0)].im, -4.357814509980649277362248, epsilon = 1e-10);
        assert_abs_diff_eq!(a[(1, 1)].im, 3.835545425226918805129593, epsilon = 1e-10);
        for (i, j) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
            assert_abs_diff_eq!(a[(i, j)].re, 0.0, epsilon = 1e-10);
        }
        let b = &periods.b;
        assert_abs_diff_eq!(b[(0, 0)].im, 1.276714171333062117405158, epsilon = 1e-10);
        assert_abs_diff_eq!(b[(0, 1)].im, 0.8545844432787435441468811, epsilon = 1e-10);
        assert_abs_diff_eq!(b[(1, 0)].im, 0.8545844432787435441468811, epsilon = 1e-10);
        assert_abs_diff_eq!(b[(1, 1)].im, 1.709168886557487088293762, epsilon = 1e-10);
        for (i, j) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
            assert_abs_diff_eq!(b[(i, j)].re, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn abel_closed_forms_match_quadrature() {
        for pts in [
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
        ] {
            let cfg = real_config(&pts);
            let periods = period_matrices(&cfg, &QuadratureSpec::default()).unwrap();
            for idx in 0..cfg.num_points() {
                let uq =
                    abel_at_branch_quadrature(&cfg, &periods, idx, &QuadratureSpec::default())
                        .unwrap();
                let uc = abel_at_branch_closed(&periods, idx);
                let red = lattice_reduce(&sub_vec(&uq, &uc), &periods.b).unwrap();
                assert!(
                    max_norm_vec(&red) < 1e-8,
                    "branch point {idx}: defect {:.3e}",
                    max_norm_vec(&red)
                );
            }
        }
    }

    #[test]
    fn infinity_abel_map_matches_pinned_value() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let periods = period_matrices(&cfg, &QuadratureSpec::default()).unwrap();
        let u = u_infinity(&cfg, &periods, 1, &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(u[0].im, 0.3211777546491619607408742, epsilon = 1e-10);
        assert_abs_diff_eq!(u[1].im, 0.4272922216393717720734405, epsilon = 1e-10);
        assert_abs_diff_eq!(u[0].re, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(u[1].re, 0.0, epsilon = 1e-10);
        let u2 = u_infinity(&cfg, &periods, 2, &QuadratureSpec::default()).unwrap();
        assert!((u2[0] + u[0]).norm() < 1e-14);
    }

    #[test]
    fn abel_map_is_path_independent_within_a_homotopy_class() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let periods = period_matrices(&cfg, &QuadratureSpec::default()).unwrap();
        let target = SheetPoint { lambda: c64(2.5, 0.8), sheet: 1 };
        let route_a = PathHint {
            waypoints: vec![c64(0.0, 0.6), c64(2.0, 0.6)],
            declared_crossings: false,
        };
        let route_b = PathHint {
            waypoints: vec![c64(-0.5, 1.2), c64(2.5, 1.2)],
            declared_crossings: false,
        };
        let ua = abel_map(&cfg, &periods, &target, Some(&route_a), &QuadratureSpec::default())
            .unwrap();
        let ub = abel_map(&cfg, &periods, &target, Some(&route_b), &QuadratureSpec::default())
            .unwrap();
        assert!((ua[0] - ub[0]).norm() < 1e-9, "routes differ by {:.3e}", (ua[0] - ub[0]).norm());
    }

    #[test]
    fn abel_map_continuity_near_branch_point() {
        // approaching a branch point from off-cut reproduces the closed form
        // up to the square root scale of the offset
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let periods = period_matrices(&cfg, &QuadratureSpec::default()).unwrap();
        let target = c64(2.0, 1e-6);
        let hint = PathHint {
            waypoints: vec![c64(0.0, 0.6), c64(2.0, 0.6)],
            declared_crossings: false,
        };
        let u = abel_map(
            &cfg,
            &periods,
            &SheetPoint { lambda: target, sheet: 1 },
            Some(&hint),
            &QuadratureSpec::default(),
        )
        .unwrap();
        let uc = abel_at_branch_closed(&periods, 2);
        let red = lattice_reduce(&sub_vec(&u, &uc), &periods.b).unwrap();
        assert!(max_norm_vec(&red) < 5e-3, "defect {:.3e}", max_norm_vec(&red));
    }

    #[test]
    fn undeclared_crossing_is_an_error() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let periods = period_matrices(&cfg, &QuadratureSpec::default()).unwrap();
        // straight to a point below the second cut: the direct leg from the
        // waypoint crosses cut 1
        let hint = PathHint {
            waypoints: vec![c64(2.5, 1.0)],
            declared_crossings: false,
        };
        let r = abel_map(
            &cfg,
            &periods,
            &SheetPoint { lambda: c64(2.5, -1.0), sheet: 1 },
            Some(&hint),
            &QuadratureSpec::default(),
        );
        assert!(matches!(r, Err(Error::PathCrossesCut { cut: 1 })));
    }

    #[test]
    fn half_characteristics_of_subsets() {
        // genus 2: the six single-point complements classify the odd ones
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        // S = {branch point 6} (index 5): p = (1/2, 0), q = (1/2, 0) mod 1
        let ch = half_characteristic(&cfg, &[5]).unwrap();
        assert_eq!(ch.parity().unwrap(), -1);
        let expect = |ch: &Characteristic, p: [f64; 2], q: [f64; 2]| {
            for k in 0..2 {
                assert_abs_diff_eq!(ch.p[k].re, p[k], epsilon = 1e-14);
                assert_abs_diff_eq!(ch.q[k].re, q[k], epsilon = 1e-14);
            }
        };
        expect(&ch, [0.5, 0.0], [0.5, 0.0]);
        // the odd bijection for the other five single point subsets
        expect(&half_characteristic(&cfg, &[1]).unwrap(), [0.5, 0.5], [0.0, 0.5]);
        expect(&half_characteristic(&cfg, &[2]).unwrap(), [0.0, 0.5], [0.0, 0.5]);
        expect(&half_characteristic(&cfg, &[3]).unwrap(), [0.0, 0.5], [0.5, 0.5]);
        expect(&half_characteristic(&cfg, &[4]).unwrap(), [0.5, 0.0], [0.5, 0.5]);
        expect(&half_characteristic(&cfg, &[0]).unwrap(), [0.5, 0.5], [0.5, 0.0]);
        for idx in 0..6 {
            assert_eq!(half_characteristic(&cfg, &[idx]).unwrap().parity().unwrap(), -1);
        }
        // even examples with three points
        expect(&half_characteristic(&cfg, &[0, 1, 2]).unwrap(), [0.0, 0.5], [0.5, 0.0]);
        expect(&half_characteristic(&cfg, &[0, 1, 3]).unwrap(), [0.0, 0.5], [0.0, 0.0]);
        expect(&half_characteristic(&cfg, &[1, 2, 4]).unwrap(), [0.0, 0.0], [0.5, 0.5]);
        for s in [[0usize, 1, 2], [0, 1, 3], [1, 2, 4]] {
            assert_eq!(half_characteristic(&cfg, &s).unwrap().parity().unwrap(), 1);
        }
    }

    #[test]
    fn riemann_constants_form() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let periods = period_matrices(&cfg, &QuadratureSpec::default()).unwrap();
        let k = riemann_constants(&periods);
        let expected = (periods.b[(0, 0)] + cr(1.0)) * cr(0.5);
        assert!((k[0] - expected).norm() < 1e-14);
    }

    #[test]
    fn diff_at_branch_root_convention() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let periods = period_matrices(&cfg, &QuadratureSpec::default()).unwrap();
        let d = diff_at_branch(&cfg, &periods, 3, 0);
        // root of (3-0)(3-1)(3-2) = sqrt(6), real positive branch
        let direct = periods.a_inv[(0, 0)] * cr(2.0) / cr(6.0f64.sqrt());
        assert!((d - direct).norm() < 1e-14);
    }

    #[test]
    fn lattice_reduction_removes_periods() {
        let cfg = real_config(&[0.0, 1.0, 2.0, 3.0]);
        let periods = period_matrices(&cfg, &QuadratureSpec::default()).unwrap();
        let x = vec![cr(3.0) + periods.b[(0, 0)] * cr(2.0) + c64(1e-11, -2e-11)];
        let red = lattice_reduce(&x, &periods.b).unwrap();
        assert!(red[0].norm() < 1e-10);
    }
}
