//! Asymptotic data of the chart map in `s = u^{-1/k}`, `t = v^{-1/(k-1)}`:
//!
//! `v₁ = v + 1 + Σ_{j<k} g_j(u) t^j + O(t^k)`,
//! `u₁ = u + 1/v + u^{(k+1)/k} v^{-k/(k-1)} Σ_{j<k-1} h_j(u) t^j + O(1/v²)`.
//!
//! With `A^k = a`, `B^{k-1} = b` fixed by the chart branch, `x = ABst` and
//! `y = Bt`, so every quantity is a polynomial in `s` and `t` and the
//! truncations below are exact for the coefficients kept.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::coords::{chart_a, chart_b, ChartMap};
use crate::error::{Error, Result};
use crate::normal_form::NormalGerm;
use crate::series::{ComplexDd, FracSeries1, FracSeries2, Precision, Scalar, TruncPoly2};

/// Ladder for the numeric fit: `v_m = V0 · 2^m`, `m = 0..=LADDER_STEPS`.
pub const FIT_V0: f64 = 1e4;
pub const FIT_LADDER_STEPS: usize = 12;
/// Extra monomials fitted beyond `jmax` to absorb the remainder.
pub const FIT_EXTRA_TERMS: usize = 2;
pub const FIT_TOL: f64 = 1e-6;

/// `A = |a|^{1/k} e^{iπ/k}`, the `k`-th root of `a` on the chart branch.
pub fn root_a(k: u32) -> Complex64 {
    Complex64::from_polar(chart_a(k).abs().powf(1.0 / k as f64), std::f64::consts::PI / k as f64)
}

/// `B = |b|^{1/(k-1)} e^{iπ/(k-1)}`.
pub fn root_b(k: u32) -> Complex64 {
    if k == 2 {
        return Complex64::new(chart_b(2), 0.0);
    }
    let r = (k - 1) as f64;
    Complex64::from_polar(chart_b(k).abs().powf(1.0 / r), std::f64::consts::PI / r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionPack {
    pub k: u32,
    /// `A` and `B` as above.
    pub root_a: Complex64,
    pub root_b: Complex64,
    pub rtilde: FracSeries1,
    pub ptilde: FracSeries2,
    pub qtilde: FracSeries2,
    pub h_series: FracSeries2,
    /// `h_j` for `j = 0..=k-2`.
    pub h_j: Vec<FracSeries1>,
    /// `g_j` for `j = 0..=k-1`.
    pub g_j: Vec<FracSeries1>,
    pub precision: Precision,
}

struct Raw<C: Scalar> {
    rtilde: FracSeries1<C>,
    ptilde: FracSeries2<C>,
    qtilde: FracSeries2<C>,
    h_series: FracSeries2<C>,
    g_j: Vec<FracSeries1<C>>,
}

fn powi<C: Scalar>(z: C, n: u32) -> C {
    (0..n).fold(C::one(), |acc, _| acc * z)
}

/// `p / y^{k+1}` with slot `n = i + j - k - 1` and `u`-exponent `m = i`.
fn tilde<C: Scalar>(p: &TruncPoly2, k: u32, ra: C, rb: C, trunc_n: u32, trunc_m: u32) -> FracSeries2<C> {
    let mut out = FracSeries2::zero(k - 1, trunc_n, k, trunc_m);
    for ((i, j), c) in p.terms() {
        assert!(i + j > k, "P and Q start at degree k + 1");
        let n = i + j - k - 1;
        out.add_term(n, i, C::from_c64(c) * powi(ra, i) * powi(rb, n));
    }
    out
}

fn expand<C: Scalar>(g: &NormalGerm, ra: C, rb: C, trunc_m: u32) -> Result<Raw<C>> {
    let k = g.k;
    let a = C::from_ratio(-(k as i64 - 1), k as i64);
    let b = C::from_ratio(-1, k as i64 - 1);
    // slots of W up to k - 1 determine g_0..g_{k-1}
    let tn = k - 1;
    let mut rtilde = FracSeries1::zero(k, trunc_m);
    for ((i, _), c) in g.r_poly.terms() {
        rtilde.add_term(i, C::from_c64(c) * powi(ra, i));
    }
    let ptilde = tilde(&g.p_part, k, ra, rb, tn, trunc_m);
    let qtilde = tilde(&g.q_part, k, ra, rb, tn, trunc_m);

    // W = 1 + A s R̃ + a s^k + B t Q̃
    let mut w = FracSeries2::constant(k - 1, tn, k, trunc_m, C::one());
    w.add_slot(0, &rtilde.shift(1).scale(ra));
    w.add_term(0, k, a);
    w = w.add(&qtilde.shift_t(1).scale(rb));

    // v₁/v = (1 + b t^{k-1} W)^{-(k-1)}; divide the increment by t^{k-1}
    let big = 2 * (k - 1);
    let eps = w.with_trunc_n(big).shift_t(k - 1).scale(b);
    let one = FracSeries2::constant(k - 1, big, k, trunc_m, C::one());
    let ratio = one.add(&eps).fracpow(-(k as i64 - 1), 1)?;
    let g_j: Vec<FracSeries1<C>> = (0..k)
        .map(|j| {
            let mut s = ratio.slot(j + k - 1);
            if j == 0 {
                s.add_term(0, -C::one());
            }
            s
        })
        .collect();
    if !g_j[0].coeff(0).is_zero() {
        return Err(Error::NotApplicable("g_0 has a constant term".into()));
    }

    // h = k B^k (s Q̃ - P̃ / A)
    let s1 = FracSeries1::from_terms(k, trunc_m, [(1, C::one())]);
    let kbk = C::from_ratio(k as i64, 1) * powi(rb, k);
    let h_series = qtilde.mul_inner(&s1).sub(&ptilde.scale(C::one() / ra)).scale(kbk);
    Ok(Raw { rtilde, ptilde, qtilde, h_series, g_j })
}

/// Builds the pack; `Extended` carries the algebra in double-double and
/// rounds the final coefficients.
pub fn build_expansion(g: &NormalGerm, precision: Precision) -> Result<ExpansionPack> {
    let k = g.k;
    let trunc_m = 2 * k;
    let (ra, rb) = (root_a(k), root_b(k));
    let raw: Raw<Complex64> = match precision {
        Precision::Double => expand(g, ra, rb, trunc_m)?,
        Precision::Extended => {
            let rad = ComplexDd::refine_root(ComplexDd::from_ratio(-(k as i64 - 1), k as i64), k, ra);
            let rbd = if k == 2 {
                ComplexDd::from_ratio(-1, 1)
            } else {
                ComplexDd::refine_root(ComplexDd::from_ratio(-1, k as i64 - 1), k - 1, rb)
            };
            let r: Raw<ComplexDd> = expand(g, rad, rbd, trunc_m)?;
            let f = |z: ComplexDd| z.to_c64();
            Raw {
                rtilde: r.rtilde.map(f),
                ptilde: r.ptilde.map(f),
                qtilde: r.qtilde.map(f),
                h_series: r.h_series.map(f),
                g_j: r.g_j.iter().map(|s| s.map(f)).collect(),
            }
        }
    };
    let h_j = (0..k - 1).map(|j| raw.h_series.slot(j)).collect();
    Ok(ExpansionPack {
        k,
        root_a: ra,
        root_b: rb,
        rtilde: raw.rtilde,
        ptilde: raw.ptilde,
        qtilde: raw.qtilde,
        h_series: raw.h_series,
        h_j,
        g_j: raw.g_j,
        precision,
    })
}

impl ExpansionPack {
    pub fn g(&self, j: usize, u: Complex64) -> Result<Complex64> {
        let s = self.g_j.get(j).ok_or(Error::IndexOutOfRange { index: j, max: self.g_j.len() - 1 })?;
        Ok(s.eval(u))
    }

    pub fn h(&self, j: usize, u: Complex64) -> Result<Complex64> {
        let max = self.h_j.len().saturating_sub(1);
        let s = self.h_j.get(j).ok_or(Error::IndexOutOfRange { index: j, max })?;
        Ok(s.eval(u))
    }

    /// Truncated prediction of `v₁ - v - 1`.
    pub fn predict_dv(&self, u: Complex64, v: Complex64) -> Complex64 {
        let t = crate::series::principal_inv_root(v, self.k - 1);
        self.g_j.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, g| acc * t + g.eval(u))
    }

    /// Truncated prediction of `u₁ - u - 1/v`.
    pub fn predict_du(&self, u: Complex64, v: Complex64) -> Complex64 {
        let k = self.k;
        let s = crate::series::principal_inv_root(u, k);
        let t = crate::series::principal_inv_root(v, k - 1);
        let sum = self.h_j.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, h| acc * t + h.eval_at_root(s));
        t.powu(k) / s.powu(k + 1) * sum
    }
}

/// `F_j(u) = ((k-1-j)/(k-1)) (1 + g_0(u))`.
#[allow(non_snake_case)]
pub fn eval_Fj(pack: &ExpansionPack, j: usize, u: Complex64) -> Result<Complex64> {
    let k = pack.k as usize;
    if j >= k {
        return Err(Error::IndexOutOfRange { index: j, max: k - 1 });
    }
    let w = (k - 1 - j) as f64 / (k - 1) as f64;
    Ok(w * (1.0 + pack.g(0, u)?))
}

/// Least-squares estimate of `g_0(u)..g_jmax(u)` from exact steps of the
/// chart map along a geometric ladder in `v`.
pub fn numeric_fit_gj(g: &NormalGerm, u: Complex64, jmax: usize) -> Result<Vec<Complex64>> {
    let map = ChartMap::new(g);
    let k = g.k;
    let cols = jmax + 1 + FIT_EXTRA_TERMS;
    let rows = FIT_LADDER_STEPS + 1;
    let t0 = FIT_V0.powf(-1.0 / (k - 1) as f64);
    let mut mat = DMatrix::<Complex64>::zeros(rows, cols);
    let mut rhs = DVector::<Complex64>::zeros(rows);
    for m in 0..rows {
        let v = Complex64::new(FIT_V0 * 2f64.powi(m as i32), 0.0);
        let (_, dv) = map.increments(u, v)?;
        rhs[m] = dv - 1.0;
        let t = v.re.powf(-1.0 / (k - 1) as f64);
        // scaled basis (t / t0)^j keeps the columns comparable
        for j in 0..cols {
            mat[(m, j)] = Complex64::new((t / t0).powi(j as i32), 0.0);
        }
    }
    let svd = mat.clone().svd(true, true);
    let sol = svd.solve(&rhs, 1e-14).map_err(|e| Error::NotApplicable(format!("least squares failed: {e}")))?;
    let resid = (&mat * &sol - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = rhs[0].norm();
    if !(resid <= FIT_TOL * scale) {
        return Err(Error::FitDiverged { residual: resid, scale });
    }
    Ok((0..=jmax).map(|j| sol[j] / t0.powi(j as i32)).collect())
}
