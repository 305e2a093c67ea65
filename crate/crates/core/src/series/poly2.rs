use std::collections::BTreeMap;

use num_complex::Complex64;

use super::Scalar;
use crate::error::{Error, Result};

/// Bivariate polynomial in `x, y` truncated at total degree `trunc_order`.
///
/// Storage is sparse and canonical: no key beyond the truncation and no
/// coefficient that is exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncPoly2<C: Scalar = Complex64> {
    coeffs: BTreeMap<(u32, u32), C>,
    trunc_order: u32,
}

impl<C: Scalar> TruncPoly2<C> {
    pub fn zero(trunc_order: u32) -> Self {
        TruncPoly2 { coeffs: BTreeMap::new(), trunc_order }
    }

    pub fn from_terms<I: IntoIterator<Item = ((u32, u32), C)>>(trunc_order: u32, terms: I) -> Self {
        let mut p = Self::zero(trunc_order);
        for ((i, j), c) in terms {
            p.add_term(i, j, c);
        }
        p
    }

    /// The coordinate function `x` (`which = 0`) or `y` (`which = 1`).
    pub fn coordinate(which: usize, trunc_order: u32) -> Self {
        let key = if which == 0 { (1, 0) } else { (0, 1) };
        Self::from_terms(trunc_order, [(key, C::one())])
    }

    pub fn trunc_order(&self) -> u32 {
        self.trunc_order
    }

    pub fn coeff(&self, i: u32, j: u32) -> C {
        self.coeffs.get(&(i, j)).copied().unwrap_or_else(C::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), C)> + '_ {
        self.coeffs.iter().map(|(&k, &c)| (k, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Overwrite one coefficient, pruning exact zeros and out-of-range keys.
    pub fn set(&mut self, i: u32, j: u32, c: C) {
        if i + j > self.trunc_order || c.is_zero() {
            self.coeffs.remove(&(i, j));
        } else {
            self.coeffs.insert((i, j), c);
        }
    }

    pub fn add_term(&mut self, i: u32, j: u32, c: C) {
        if i + j > self.trunc_order {
            return;
        }
        let cur = self.coeff(i, j);
        self.set(i, j, cur + c);
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.coeffs.keys().map(|&(i, j)| i + j).max()
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.coeffs.keys().map(|&(i, j)| i + j).min()
    }

    pub fn homogeneous_part(&self, degree: u32) -> Self {
        Self::from_terms(self.trunc_order, self.terms().filter(|&((i, j), _)| i + j == degree))
    }

    /// Terms of total degree in `lo..=hi`.
    pub fn degree_band(&self, lo: u32, hi: u32) -> Self {
        Self::from_terms(self.trunc_order, self.terms().filter(|&((i, j), _)| i + j >= lo && i + j <= hi))
    }

    pub fn truncate(&self, order: u32) -> Self {
        Self::from_terms(order, self.terms().filter(|&((i, j), _)| i + j <= order))
    }

    pub fn with_trunc(&self, order: u32) -> Self {
        Self::from_terms(order, self.terms())
    }

    pub fn scale(&self, s: C) -> Self {
        Self::from_terms(self.trunc_order, self.terms().map(|(k, c)| (k, c * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.trunc_order.min(other.trunc_order));
        for ((i, j), c) in self.terms().chain(other.terms()) {
            out.add_term(i, j, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-C::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.trunc_order.min(other.trunc_order);
        let mut out = Self::zero(order);
        for ((i1, j1), c1) in self.terms() {
            for ((i2, j2), c2) in other.terms() {
                if i1 + i2 + j1 + j2 <= order {
                    out.add_term(i1 + i2, j1 + j2, c1 * c2);
                }
            }
        }
        out
    }

    pub fn map<D: Scalar>(&self, f: impl Fn(C) -> D) -> TruncPoly2<D> {
        TruncPoly2::from_terms(self.trunc_order, self.terms().map(|(k, c)| (k, f(c))))
    }

    /// Largest coefficient magnitude (0 for the zero polynomial).
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: C, y: C) -> C {
        let mut acc = C::zero();
        for ((i, j), c) in self.terms() {
            let mut t = c;
            for _ in 0..i {
                t = t * x;
            }
            for _ in 0..j {
                t = t * y;
            }
            acc = acc + t;
        }
        acc
    }

    /// Partial derivative in `x` (`which = 0`) or `y` (`which = 1`).
    pub fn derivative(&self, which: usize) -> Self {
        let mut out = Self::zero(self.trunc_order);
        for ((i, j), c) in self.terms() {
            let (e, ni, nj) = if which == 0 { (i, i.wrapping_sub(1), j) } else { (j, i, j.wrapping_sub(1)) };
            if e > 0 {
                out.add_term(ni, nj, c * C::from_ratio(e as i64, 1));
            }
        }
        out
    }
}

impl TruncPoly2<Complex64> {
    /// Largest coefficient difference against `other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }
}

/// Computes `f ∘ g` for maps given as component pairs, exact through total
/// degree `order`. Both maps must vanish at the origin.
pub fn poly_compose<C: Scalar>(
    f: &[TruncPoly2<C>; 2],
    g: &[TruncPoly2<C>; 2],
    order: u32,
) -> Result<[TruncPoly2<C>; 2]> {
    let available = f.iter().chain(g.iter()).map(|p| p.trunc_order).min().unwrap_or(0);
    if order > available {
        return Err(Error::TruncationUnderflow { requested: order, available });
    }
    let max_deg = f.iter().filter_map(|p| p.max_degree()).max().unwrap_or(0).min(order);
    // powers g1^i and g2^j; g has no constant term so degrees only grow
    let powers = |p: &TruncPoly2<C>| {
        let mut v = vec![TruncPoly2::from_terms(order, [((0, 0), C::one())])];
        for i in 1..=max_deg as usize {
            let next = v[i - 1].mul(&p.with_trunc(order));
            v.push(next);
        }
        v
    };
    let gx = powers(&g[0]);
    let gy = powers(&g[1]);
    let compose_one = |p: &TruncPoly2<C>| {
        let mut out = TruncPoly2::zero(order);
        for ((i, j), c) in p.terms() {
            if i + j > order {
                continue;
            }
            let term = gx[i as usize].mul(&gy[j as usize]).scale(c);
            out = out.add(&term);
        }
        out
    };
    Ok([compose_one(&f[0]), compose_one(&f[1])])
}
