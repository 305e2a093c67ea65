//! Germs of ℂ² tangent to the identity: order, characteristic directions,
//! degeneracy and directors.

pub mod roots;

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::TruncPoly2;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Relative threshold for λ = 0.
pub const TOL_LAMBDA: f64 = 1e-10;
/// Relative threshold below which a coefficient of the direction polynomial
/// counts as zero.
const TOL_COEFF: f64 = 1e-13;

/// A germ `(x, y) ↦ (comp1, comp2)` whose linear part is the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct GermMap {
    pub comp1: TruncPoly2,
    pub comp2: TruncPoly2,
    pub trunc_order: u32,
}

impl GermMap {
    /// Builds a germ from components that include the identity part.
    pub fn new(comp1: TruncPoly2, comp2: TruncPoly2) -> Result<Self> {
        let trunc_order = comp1.trunc_order().min(comp2.trunc_order());
        let linear_ok = comp1.coeff(0, 0) == C0
            && comp2.coeff(0, 0) == C0
            && comp1.coeff(1, 0) == C1
            && comp1.coeff(0, 1) == C0
            && comp2.coeff(1, 0) == C0
            && comp2.coeff(0, 1) == C1;
        if !linear_ok {
            return Err(Error::Parse { line: 0, msg: "linear part must be exactly the identity".into() });
        }
        Ok(GermMap { comp1: comp1.with_trunc(trunc_order), comp2: comp2.with_trunc(trunc_order), trunc_order })
    }

    /// Identity plus the given higher-order terms `(component, i, j, coeff)`.
    pub fn from_nonlinear<I>(trunc_order: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, u32, u32, Complex64)>,
    {
        let mut c1 = TruncPoly2::coordinate(0, trunc_order);
        let mut c2 = TruncPoly2::coordinate(1, trunc_order);
        for (c, i, j, z) in terms {
            if i + j < 2 {
                return Err(Error::Parse { line: 0, msg: format!("term x^{i} y^{j} is not of order >= 2") });
            }
            if c == 1 {
                c1.add_term(i, j, z)
            } else {
                c2.add_term(i, j, z)
            }
        }
        GermMap::new(c1, c2)
    }

    pub fn components(&self) -> [TruncPoly2; 2] {
        [self.comp1.clone(), self.comp2.clone()]
    }

    /// Homogeneous part `P_j` as a pair of polynomials.
    pub fn homogeneous(&self, j: u32) -> [TruncPoly2; 2] {
        [self.comp1.homogeneous_part(j), self.comp2.homogeneous_part(j)]
    }

    pub fn eval(&self, x: Complex64, y: Complex64) -> (Complex64, Complex64) {
        (self.comp1.eval(x, y), self.comp2.eval(x, y))
    }

    pub fn max_degree(&self) -> u32 {
        self.comp1.max_degree().unwrap_or(0).max(self.comp2.max_degree().unwrap_or(0))
    }

    /// Serializes the nonlinear part in the text format read by [`parse_germ`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (c, p) in [(1, &self.comp1), (2, &self.comp2)] {
            for ((i, j), z) in p.terms() {
                if i + j >= 2 {
                    let _ = writeln!(s, "{c} {i} {j} {:e} {:e}", z.re, z.im);
                }
            }
        }
        s
    }
}

/// Parses the line format `c i j re im`. The identity part is implicit.
///
/// The truncation order is the larger of the highest degree present and
/// `2k + 2`, where `k` is the lowest nonlinear degree (6 for an empty file).
pub fn parse_germ(text: &str) -> Result<GermMap> {
    let mut terms = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: n + 1, msg };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", f.len())));
        }
        let c: usize = f[0].parse().map_err(|_| err(format!("bad component {:?}", f[0])))?;
        let i: u32 = f[1].parse().map_err(|_| err(format!("bad exponent {:?}", f[1])))?;
        let j: u32 = f[2].parse().map_err(|_| err(format!("bad exponent {:?}", f[2])))?;
        let re: f64 = f[3].parse().map_err(|_| err(format!("bad number {:?}", f[3])))?;
        let im: f64 = f[4].parse().map_err(|_| err(format!("bad number {:?}", f[4])))?;
        if c != 1 && c != 2 {
            return Err(err(format!("component must be 1 or 2, got {c}")));
        }
        if i + j < 2 {
            return Err(err("constant and linear terms are implicit and must not appear".into()));
        }
        if !re.is_finite() || !im.is_finite() {
            return Err(err("coefficient is not finite".into()));
        }
        if !seen.insert((c, i, j)) {
            return Err(err(format!("duplicate monomial {c} {i} {j}")));
        }
        terms.push((c, i, j, Complex64::new(re, im)));
    }
    let nonzero = terms.iter().filter(|t| t.3 != C0);
    let k = nonzero.clone().map(|t| t.1 + t.2).min();
    let max_deg = nonzero.map(|t| t.1 + t.2).max().unwrap_or(0);
    let trunc = match k {
        Some(k) => max_deg.max(2 * k + 2),
        None => 6,
    };
    GermMap::from_nonlinear(trunc, terms)
}

/// Order `k`: the lowest degree `j >= 2` with `P_j ≠ 0`.
pub fn order_of(g: &GermMap) -> Result<u32> {
    (2..=g.trunc_order)
        .find(|&j| !g.comp1.homogeneous_part(j).is_zero() || !g.comp2.homogeneous_part(j).is_zero())
        .ok_or(Error::IdentityGerm(g.trunc_order))
}

/// A projective point `[v0 : v1]` with the larger slot equal to one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjPoint(pub Complex64, pub Complex64);

impl ProjPoint {
    /// Normalizes so the larger-magnitude slot is 1 (ties go to the second).
    pub fn normalized(v0: Complex64, v1: Complex64) -> Self {
        if v1.norm() >= v0.norm() {
            ProjPoint(v0 / v1, C1)
        } else {
            ProjPoint(C1, v1 / v0)
        }
    }

    /// Chordal-type distance between normalized representatives.
    pub fn distance(&self, other: &ProjPoint) -> f64 {
        let a = ProjPoint::normalized(self.0, self.1);
        let b = ProjPoint::normalized(other.0, other.1);
        // |v × w| / (|v||w|) is chart independent
        let cross = (a.0 * b.1 - a.1 * b.0).norm();
        cross / ((a.0.norm_sqr() + a.1.norm_sqr()).sqrt() * (b.0.norm_sqr() + b.1.norm_sqr()).sqrt())
    }

    /// True when the second slot is the normalized one (the chart `y = 1`).
    pub fn in_vertical_chart(&self) -> bool {
        self.1 == C1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharDirection {
    pub dir: ProjPoint,
    pub lambda: Complex64,
    pub degenerate: bool,
    /// `None` for degenerate directions.
    pub director: Option<Complex64>,
    pub multiplicity: u32,
}

/// Characteristic directions plus any numerical warnings.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    pub k: u32,
    pub directions: Vec<CharDirection>,
    pub warnings: Vec<String>,
}

/// Coefficients of `p(x, 1)` in ascending powers of `x`.
fn restrict_y1(p: &TruncPoly2) -> Vec<Complex64> {
    let deg = p.max_degree().unwrap_or(0) as usize;
    let mut v = vec![C0; deg + 1];
    for ((i, _), c) in p.terms() {
        v[i as usize] += c;
    }
    v
}

/// Coefficients of `p(1, y)` in ascending powers of `y`.
fn restrict_x1(p: &TruncPoly2) -> Vec<Complex64> {
    let deg = p.max_degree().unwrap_or(0) as usize;
    let mut v = vec![C0; deg + 1];
    for ((_, j), c) in p.terms() {
        v[j as usize] += c;
    }
    v
}

fn pk_scale(pk: &[TruncPoly2; 2]) -> f64 {
    pk[0].max_abs().max(pk[1].max_abs())
}

/// `H = x·P_k² − y·P_k¹`, homogeneous of degree `k + 1`.
fn direction_polynomial(pk: &[TruncPoly2; 2]) -> TruncPoly2 {
    let order = pk[0].trunc_order().max(pk[1].trunc_order()) + 1;
    let x = TruncPoly2::coordinate(0, order);
    let y = TruncPoly2::coordinate(1, order);
    x.mul(&pk[1].with_trunc(order)).sub(&y.mul(&pk[0].with_trunc(order)))
}

/// Director at `d` from the induced map on ℙ¹ in the chart where `d` lies.
fn director_in_chart(pk: &[TruncPoly2; 2], d: &ProjPoint) -> Result<Complex64> {
    let (num, den, t) = if d.in_vertical_chart() {
        (restrict_y1(&pk[0]), restrict_y1(&pk[1]), d.0)
    } else {
        (restrict_x1(&pk[1]), restrict_x1(&pk[0]), d.1)
    };
    let dn = roots::derivative(&num);
    let dd = roots::derivative(&den);
    let (n0, d0) = (roots::horner(&num, t), roots::horner(&den, t));
    if d0.norm() == 0.0 {
        return Err(Error::NotApplicable("induced map has a pole at the direction".into()));
    }
    let gp = (roots::horner(&dn, t) * d0 - n0 * roots::horner(&dd, t)) / (d0 * d0);
    Ok(gp - C1)
}

/// Eigenvalue `λ` read from the normalized slot.
fn lambda_at(pk: &[TruncPoly2; 2], d: &ProjPoint) -> Complex64 {
    if d.in_vertical_chart() {
        pk[1].eval(d.0, d.1)
    } else {
        pk[0].eval(d.0, d.1)
    }
}

pub fn characteristic_directions(g: &GermMap) -> Result<DirectionSet> {
    let k = order_of(g)?;
    let pk = g.homogeneous(k);
    let scale = pk_scale(&pk);
    let h = direction_polynomial(&pk);
    let tol = TOL_COEFF * scale;
    if h.max_abs() <= tol {
        return Err(Error::EveryDirectionCharacteristic);
    }
    let mut warnings = Vec::new();
    // chart y = 1: p(x) = H(x, 1); a degree deficit is a root at [1:0]
    let p = restrict_y1(&h);
    let mut p = roots::trim(&p, tol);
    let deficit = (k + 1) as usize - (p.len() - 1);
    // roots at x = 0 are split off exactly
    let mut zero_mult = 0;
    while p.len() > 1 && p[0].norm() <= tol {
        p.remove(0);
        zero_mult += 1;
    }
    let (mut found, ill) = roots::clustered_roots(&p);
    if ill {
        warnings.push("ill-conditioned roots: clusters are close or failed the residual check".into());
    }
    if zero_mult > 0 {
        found.push(roots::Root { value: C0, multiplicity: zero_mult });
    }
    let mut points: Vec<(ProjPoint, u32)> = Vec::new();
    let q = restrict_x1(&h);
    let dq = roots::derivative(&q);
    for r in found {
        let mut pt = ProjPoint::normalized(r.value, C1);
        if !pt.in_vertical_chart() && r.multiplicity == 1 {
            // polish in the chart x = 1 where this root is better conditioned
            let mut y = pt.1;
            for _ in 0..3 {
                let step = roots::horner(&q, y) / roots::horner(&dq, y);
                if step.is_finite() {
                    y -= step;
                }
            }
            pt = ProjPoint::normalized(C1, y);
        }
        points.push((pt, r.multiplicity));
    }
    if deficit > 0 {
        points.push((ProjPoint(C1, C0), deficit as u32));
    }
    let directions = points
        .into_iter()
        .map(|(dir, multiplicity)| {
            let lambda = lambda_at(&pk, &dir);
            let degenerate = lambda.norm() <= TOL_LAMBDA * scale;
            let director = if degenerate { None } else { director_in_chart(&pk, &dir).ok() };
            CharDirection { dir, lambda, degenerate, director, multiplicity }
        })
        .collect();
    Ok(DirectionSet { k, directions, warnings })
}

pub fn director_of(g: &GermMap, d: &CharDirection) -> Result<Complex64> {
    if d.degenerate {
        return Err(Error::NotApplicable("direction is degenerate".into()));
    }
    let k = order_of(g)?;
    director_in_chart(&g.homogeneous(k), &d.dir)
}

/// Outcome of the unique non-degenerate direction check.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    pub pass: bool,
    pub k: Option<u32>,
    pub direction: Option<CharDirection>,
    pub all_directions: Vec<CharDirection>,
    pub reasons: Vec<String>,
}

#[allow(non_snake_case)]
pub fn check_theoremA_hypothesis(g: &GermMap) -> HypothesisReport {
    let mut report =
        HypothesisReport { pass: false, k: None, direction: None, all_directions: vec![], reasons: vec![] };
    match characteristic_directions(g) {
        Err(e) => report.reasons.push(e.to_string()),
        Ok(set) => {
            report.k = Some(set.k);
            report.reasons.extend(set.warnings.iter().cloned());
            let n = set.directions.len();
            if n != 1 {
                report.reasons.push(format!("found {n} characteristic directions, need exactly one"));
            } else if set.directions[0].degenerate {
                report.reasons.push("the only characteristic direction is degenerate".into());
            } else {
                report.pass = true;
                report.direction = Some(set.directions[0].clone());
            }
            report.all_directions = set.directions;
        }
    }
    report
}
