//! Linear normalization of a germ with a unique non-degenerate characteristic
//! direction into
//!
//! `f₀(x,y) = (x(1 + xyR + y^{k-1}) + P, y(1 + xyR + y^{k-1}) + x^k + Q)`.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::germ::{check_theoremA_hypothesis, order_of, roots, CharDirection, GermMap};
use crate::series::{poly_compose, TruncPoly2};

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Relative tolerance on the structural identities of `P_k`.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Relative tolerance for re-verifying the linear parameter conditions.
pub const PARAM_TOL: f64 = 1e-12;
/// Largest degree-k residual that is snapped to the exact template.
pub const SNAP_TOL: f64 = 1e-9;

pub type Mat2 = Matrix2<Complex64>;

/// The composite linear change of coordinates `T = move_dir · l`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConj {
    pub move_dir: Mat2,
    /// `(a, c, d)` for `l(x, y) = (ax, cx + dy)`.
    pub l_params: (Complex64, Complex64, Complex64),
}

impl LinearConj {
    pub fn identity() -> Self {
        LinearConj { move_dir: Mat2::identity(), l_params: (C1, C0, C1) }
    }

    pub fn l_matrix(&self) -> Mat2 {
        let (a, c, d) = self.l_params;
        Mat2::new(a, C0, c, d)
    }

    /// `T` with `base = T⁻¹ ∘ g ∘ T`.
    pub fn matrix(&self) -> Mat2 {
        self.move_dir * self.l_matrix()
    }

    /// Maps normal-form coordinates to the original ones.
    pub fn to_original(&self, x: Complex64, y: Complex64) -> (Complex64, Complex64) {
        let t = self.matrix();
        (t[(0, 0)] * x + t[(0, 1)] * y, t[(1, 0)] * x + t[(1, 1)] * y)
    }

    /// Maps original coordinates to normal-form ones.
    pub fn to_normal(&self, x: Complex64, y: Complex64) -> (Complex64, Complex64) {
        let t = self.matrix().try_inverse().expect("conjugation is invertible");
        (t[(0, 0)] * x + t[(0, 1)] * y, t[(1, 0)] * x + t[(1, 1)] * y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalGerm {
    pub base: GermMap,
    pub k: u32,
    /// Homogeneous of degree `k - 3`; zero when `k <= 2`.
    pub r_poly: TruncPoly2,
    pub p_part: TruncPoly2,
    pub q_part: TruncPoly2,
    pub conj: LinearConj,
    /// Human-readable record of the root and branch choices made.
    pub choices: Vec<String>,
}

fn linear_poly(m: &Mat2, order: u32) -> [TruncPoly2; 2] {
    [
        TruncPoly2::from_terms(order, [((1, 0), m[(0, 0)]), ((0, 1), m[(0, 1)])]),
        TruncPoly2::from_terms(order, [((1, 0), m[(1, 0)]), ((0, 1), m[(1, 1)])]),
    ]
}

/// `T⁻¹ ∘ g ∘ T`. The linear part is reset to the exact identity, which it
/// equals up to rounding.
pub fn conjugate_linear(g: &GermMap, t: &Mat2) -> Result<GermMap> {
    let inv = t.try_inverse().ok_or_else(|| Error::NotApplicable("conjugating matrix is singular".into()))?;
    let order = g.trunc_order;
    let [g1, g2] = poly_compose(&g.components(), &linear_poly(t, order), order)?;
    let mut c1 = g1.scale(inv[(0, 0)]).add(&g2.scale(inv[(0, 1)]));
    let mut c2 = g1.scale(inv[(1, 0)]).add(&g2.scale(inv[(1, 1)]));
    for p in [&mut c1, &mut c2] {
        p.set(0, 0, C0);
        p.set(1, 0, C0);
        p.set(0, 1, C0);
    }
    c1.set(1, 0, C1);
    c2.set(0, 1, C1);
    GermMap::new(c1, c2)
}

/// Matrix sending `[0:1]` to the direction `d`: second column `v`, first
/// column the unit vector that keeps the matrix well conditioned.
pub fn direction_matrix(d: &CharDirection) -> Mat2 {
    let (v0, v1) = (d.dir.0, d.dir.1);
    if v1.norm() >= v0.norm() {
        Mat2::new(C1, v0, C0, v1)
    } else {
        Mat2::new(C0, v0, C1, v1)
    }
}

/// Conjugates so that `d` becomes `[0:1]`; returns the new germ and the matrix.
pub fn move_direction_to_vertical(g: &GermMap, d: &CharDirection) -> Result<(GermMap, Mat2)> {
    let m = direction_matrix(d);
    Ok((conjugate_linear(g, &m)?, m))
}

/// `a_0..a_{k-1}` and `b_0` with `P_k = (xS, yS + b_0 x^k)`,
/// `S = Σ a_j x^{k-1-j} y^j`.
pub fn extract_pk_structure(g: &GermMap) -> Result<(Vec<Complex64>, Complex64)> {
    let k = order_of(g)?;
    let a: Vec<Complex64> = (0..=k).map(|j| g.comp1.coeff(k - j, j)).collect();
    let b: Vec<Complex64> = (0..=k).map(|j| g.comp2.coeff(k - j, j)).collect();
    let scale = a.iter().chain(b.iter()).map(|z| z.norm()).fold(0.0, f64::max);
    let tol = STRUCTURE_TOL * scale;
    let fail = |msg: String| Err(Error::NotUniqueDirection(msg));
    if a[k as usize].norm() > tol {
        return fail(format!("[0:1] is not characteristic (a_k = {})", a[k as usize]));
    }
    if b[k as usize].norm() <= tol {
        return fail("[0:1] is degenerate (b_k = 0)".into());
    }
    if b[0].norm() <= tol {
        return fail("[1:0] is also characteristic (b_0 = 0)".into());
    }
    for j in 1..=k as usize {
        if (a[j - 1] - b[j]).norm() > tol {
            return fail(format!("a_{} != b_{}: another characteristic direction exists", j - 1, j));
        }
    }
    Ok((a[..k as usize].to_vec(), b[0]))
}

fn principal_root(z: Complex64, r: u32) -> Complex64 {
    if r == 1 {
        z
    } else {
        z.powf(1.0 / r as f64)
    }
}

/// Solves `b₀a^k/d = 1`, `a_{k-1}d^{k-1} = 1`, `Σ a_j a^{k-1-j} c^j = 0`.
pub fn solve_linear_params(
    a_j: &[Complex64],
    b0: Complex64,
    k: u32,
) -> Result<((Complex64, Complex64, Complex64), Vec<String>)> {
    let mut log = Vec::new();
    let ak1 = a_j[k as usize - 1];
    let d = principal_root(ak1.inv(), k - 1);
    log.push(format!("d = principal {}-th root of 1/a_{{k-1}} = {d}", k - 1));
    let a = principal_root(d / b0, k);
    log.push(format!("a = principal {k}-th root of d/b0 = {a}"));
    // coefficient of c^j is a_j a^{k-1-j}
    let poly: Vec<Complex64> = (0..k as usize).map(|j| a_j[j] * a.powu(k - 1 - j as u32)).collect();
    let c = if poly[0] == C0 {
        C0
    } else {
        let scale = poly.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let trimmed = roots::trim(&poly, 1e-14 * scale);
        // multiple roots are common (the template itself has one) and are
        // only accurate to noise^(1/m) unless refined as clusters
        let (mut cands, _) = roots::clustered_roots(&trimmed);
        cands.sort_by(|x, y| {
            let (nx, ny) = (x.value.norm(), y.value.norm());
            if (nx - ny).abs() <= 1e-12 * nx.max(ny) {
                x.value.arg().partial_cmp(&y.value.arg()).unwrap()
            } else {
                nx.partial_cmp(&ny).unwrap()
            }
        });
        let mut c = cands[0].value;
        if cands[0].multiplicity == 1 {
            let dp = roots::derivative(&trimmed);
            for _ in 0..3 {
                let step = roots::horner(&trimmed, c) / roots::horner(&dp, c);
                if step.is_finite() {
                    c -= step;
                }
            }
        }
        c
    };
    log.push(format!("c = smallest-magnitude root of the x^(k-1) condition = {c}"));
    let r1 = (b0 * a.powu(k) / d - C1).norm();
    let r2 = (ak1 * d.powu(k - 1) - C1).norm();
    let scale3: f64 = poly.iter().map(|z| z.norm()).sum::<f64>() * c.norm().max(1.0).powi(k as i32);
    let r3 = roots::horner(&poly, c).norm() / scale3.max(f64::MIN_POSITIVE);
    if r1 > PARAM_TOL || r2 > PARAM_TOL || r3 > PARAM_TOL {
        return Err(Error::NotApplicable(format!(
            "linear parameter conditions not met: residuals {r1:e}, {r2:e}, {r3:e}"
        )));
    }
    Ok(((a, c, d), log))
}

/// Checks the degree-k template and snaps it exactly.
fn snap_template(g: &GermMap, k: u32) -> Result<GermMap> {
    let mut c1 = g.comp1.clone();
    let mut c2 = g.comp2.clone();
    let scale = g.homogeneous(k).iter().map(|p| p.max_abs()).fold(0.0, f64::max).max(1.0);
    let mut resid: f64 = 0.0;
    let mut fix = |p: &mut TruncPoly2, i: u32, j: u32, target: Complex64| {
        resid = resid.max((p.coeff(i, j) - target).norm());
        p.set(i, j, target);
    };
    fix(&mut c1, k, 0, C0);
    fix(&mut c1, 0, k, C0);
    fix(&mut c1, 1, k - 1, C1);
    fix(&mut c2, k, 0, C1);
    // comp2_k = y·(comp1_k / x) + x^k
    for j in 1..=k {
        let target = c1.coeff(k - j + 1, j - 1);
        fix(&mut c2, k - j, j, target);
    }
    if resid > SNAP_TOL * scale {
        return Err(Error::NotApplicable(format!("degree-k part misses the normal form by {resid:e}")));
    }
    GermMap::new(c1, c2)
}

/// Splits an already normalized germ into `R`, `P`, `Q`.
fn split(base: &GermMap, k: u32) -> (TruncPoly2, TruncPoly2, TruncPoly2) {
    let order = base.trunc_order;
    let mut r = TruncPoly2::zero(order);
    // comp1_k = x^2 y R + x y^{k-1}
    for ((i, j), c) in base.comp1.homogeneous_part(k).terms() {
        if i >= 2 && j >= 1 {
            r.add_term(i - 2, j - 1, c);
        }
    }
    let p = base.comp1.degree_band(k + 1, order);
    let q = base.comp2.degree_band(k + 1, order);
    (r, p, q)
}

pub fn normalize(g: &GermMap) -> Result<NormalGerm> {
    let report = check_theoremA_hypothesis(g);
    if !report.pass {
        return Err(Error::NotUniqueDirection(report.reasons.join("; ")));
    }
    let k = report.k.expect("k set when the check passes");
    let d = report.direction.expect("direction set when the check passes");
    let (moved, m) = move_direction_to_vertical(g, &d)?;
    let (a_j, b0) = extract_pk_structure(&moved)?;
    let (l_params, mut choices) = solve_linear_params(&a_j, b0, k)?;
    let conj = LinearConj { move_dir: m, l_params };
    choices.insert(0, format!("direction [{}:{}] moved to [0:1]", d.dir.0, d.dir.1));
    let base = snap_template(&conjugate_linear(&moved, &conj.l_matrix())?, k)?;
    let (r_poly, p_part, q_part) = split(&base, k);
    Ok(NormalGerm { base, k, r_poly, p_part, q_part, conj, choices })
}

impl NormalGerm {
    /// Builds a normal germ directly from `k`, `R`, `P`, `Q` (no conjugation).
    pub fn from_parts(k: u32, r: &TruncPoly2, p: &TruncPoly2, q: &TruncPoly2, order: u32) -> Result<Self> {
        let mut terms = vec![(1, 1, k - 1, C1), (2, 0, k, C1), (2, k, 0, C1)];
        for ((i, j), c) in r.terms() {
            terms.push((1, i + 2, j + 1, c));
            terms.push((2, i + 1, j + 2, c));
        }
        for ((i, j), c) in p.terms() {
            terms.push((1, i, j, c));
        }
        for ((i, j), c) in q.terms() {
            terms.push((2, i, j, c));
        }
        normalize(&GermMap::from_nonlinear(order, terms)?)
    }

    /// `conj ∘ base ∘ conj⁻¹`, i.e. the original germ recovered from the
    /// normal form.
    pub fn recompose(&self) -> Result<GermMap> {
        let t = self.conj.matrix();
        let inv = t.try_inverse().ok_or_else(|| Error::NotApplicable("conjugation is singular".into()))?;
        conjugate_linear(&self.base, &inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::{characteristic_directions, parse_germ, ProjPoint};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn one_one_one() -> GermMap {
        parse_germ("1 1 1 1 0\n2 0 2 1 0\n2 2 0 1 0\n").unwrap()
    }

    #[test]
    fn one_one_one_is_already_normal() {
        let g = one_one_one();
        let n = normalize(&g).unwrap();
        assert_eq!(n.k, 2);
        assert_eq!(n.base, g);
        assert!(n.r_poly.is_zero() && n.p_part.is_zero() && n.q_part.is_zero());
        assert_eq!(n.conj, LinearConj::identity());
    }

    #[test]
    fn structure_of_one_one_one() {
        let (a, b0) = extract_pk_structure(&one_one_one()).unwrap();
        assert_eq!(a, vec![c(0.0), c(1.0)]);
        assert_eq!(b0, c(1.0));
    }

    #[test]
    fn structure_ignores_higher_terms() {
        let g = parse_germ("1 1 1 1 0\n2 0 2 1 0\n2 2 0 1 0\n1 3 0 5 0\n2 1 2 -2 1\n").unwrap();
        let (a, b0) = extract_pk_structure(&g).unwrap();
        assert_eq!(a, vec![c(0.0), c(1.0)]);
        assert_eq!(b0, c(1.0));
    }

    #[test]
    fn structure_rejects_squares() {
        let g = GermMap::from_nonlinear(6, [(1, 2, 0, c(1.0)), (2, 0, 2, c(1.0))]).unwrap();
        assert!(matches!(extract_pk_structure(&g), Err(Error::NotUniqueDirection(_))));
    }

    #[test]
    fn linear_params_examples() {
        let ((a, cc, d), _) = solve_linear_params(&[c(0.0), c(1.0)], c(1.0), 2).unwrap();
        assert_eq!((a, cc, d), (c(1.0), c(0.0), c(1.0)));
        let ((a, cc, d), _) = solve_linear_params(&[c(0.0), c(4.0)], c(1.0), 2).unwrap();
        assert!((d - c(0.25)).norm() < 1e-15 && (a - c(0.5)).norm() < 1e-15 && cc == c(0.0));
        let ((a, cc, d), _) = solve_linear_params(&[c(2.0), c(1.0)], c(1.0), 2).unwrap();
        assert!((d - c(1.0)).norm() < 1e-15 && (a - c(1.0)).norm() < 1e-15);
        assert!((cc - c(-2.0)).norm() < 1e-14);
    }

    #[test]
    fn vertical_direction_needs_no_move() {
        let g = one_one_one();
        let d = characteristic_directions(&g).unwrap().directions[0].clone();
        let (moved, m) = move_direction_to_vertical(&g, &d).unwrap();
        assert_eq!(m, Mat2::identity());
        assert_eq!(moved, g);
    }

    #[test]
    fn horizontal_direction_is_swapped() {
        // (1₁₁) with the coordinates swapped has the direction [1:0]
        let g = parse_germ("2 1 1 1 0\n1 2 0 1 0\n1 0 2 1 0\n").unwrap();
        let d = characteristic_directions(&g).unwrap().directions[0].clone();
        assert_eq!(d.dir, ProjPoint(c(1.0), c(0.0)));
        let (moved, m) = move_direction_to_vertical(&g, &d).unwrap();
        assert_eq!(m, Mat2::new(C0, C1, C1, C0));
        let set = characteristic_directions(&moved).unwrap();
        assert_eq!(set.directions.len(), 1);
        assert_eq!(set.directions[0].dir, ProjPoint(c(0.0), c(1.0)));
    }

    #[test]
    fn cubic_in_normal_form_is_a_fixed_point() {
        let g =
            GermMap::from_nonlinear(8, [(1, 1, 2, c(1.0)), (1, 4, 0, c(1.0)), (2, 0, 3, c(1.0)), (2, 3, 0, c(1.0))])
                .unwrap();
        let n = normalize(&g).unwrap();
        assert_eq!(n.k, 3);
        assert!(n.base.comp1.max_diff(&g.comp1) < 1e-15);
        assert!(n.base.comp2.max_diff(&g.comp2) < 1e-15);
        assert_eq!(n.p_part, TruncPoly2::from_terms(8, [((4, 0), c(1.0))]));
        assert!(n.q_part.is_zero());
        assert!(n.r_poly.is_zero());
    }

    #[test]
    fn recompose_round_trip() {
        let g = one_one_one();
        let t = Mat2::new(Complex64::new(0.3, 1.0), c(2.0), c(-1.0), Complex64::new(0.5, -0.2));
        let h = conjugate_linear(&g, &t).unwrap();
        let n = normalize(&h).unwrap();
        assert!(n.base.comp1.max_diff(&g.comp1) < 1e-9, "{:?}", n.base);
        assert!(n.base.comp2.max_diff(&g.comp2) < 1e-9);
        let back = n.recompose().unwrap();
        assert!(back.comp1.max_diff(&h.comp1) < 1e-9);
        assert!(back.comp2.max_diff(&h.comp2) < 1e-9);
    }
}
