use std::collections::BTreeMap;

use num_complex::Complex64;

use super::Scalar;
use crate::error::{Error, Result};

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

/// Generalized binomial coefficients `C(num/den, n)` for `n = 0..=n_max`.
pub fn binomial_coeffs<C: Scalar>(num: i64, den: i64, n_max: usize) -> Vec<C> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut c = C::one();
    out.push(c);
    for n in 0..n_max as i64 {
        c = c * C::from_ratio(num - n * den, (n + 1) * den);
        out.push(c);
    }
    out
}

/// `z^(-1/r)` on the principal branch.
pub fn principal_inv_root(z: Complex64, r: u32) -> Complex64 {
    match r {
        1 => z.inv(),
        2 => z.sqrt().inv(),
        _ => z.powf(-1.0 / r as f64),
    }
}

/// Series `Σ c_m z^(-m/r)` truncated at `m <= trunc_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct FracSeries1<C: Scalar = Complex64> {
    base_root: u32,
    coeffs: BTreeMap<u32, C>,
    trunc_m: u32,
}

impl<C: Scalar> FracSeries1<C> {
    pub fn zero(base_root: u32, trunc_m: u32) -> Self {
        assert!(base_root > 0, "base root must be positive");
        FracSeries1 { base_root, coeffs: BTreeMap::new(), trunc_m }
    }

    pub fn constant(base_root: u32, trunc_m: u32, c: C) -> Self {
        Self::from_terms(base_root, trunc_m, [(0, c)])
    }

    pub fn from_terms<I: IntoIterator<Item = (u32, C)>>(base_root: u32, trunc_m: u32, terms: I) -> Self {
        let mut s = Self::zero(base_root, trunc_m);
        for (m, c) in terms {
            s.add_term(m, c);
        }
        s
    }

    pub fn base_root(&self) -> u32 {
        self.base_root
    }

    pub fn trunc_m(&self) -> u32 {
        self.trunc_m
    }

    pub fn coeff(&self, m: u32) -> C {
        self.coeffs.get(&m).copied().unwrap_or_else(C::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, C)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (m, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_term(&mut self, m: u32, c: C) {
        if m > self.trunc_m {
            return;
        }
        let cur = self.coeff(m) + c;
        if cur.is_zero() {
            self.coeffs.remove(&m);
        } else {
            self.coeffs.insert(m, cur);
        }
    }

    /// Re-express over the finer root `new_root` (a multiple of the current one).
    pub fn rebase(&self, new_root: u32) -> Self {
        assert!(new_root % self.base_root == 0, "rebase target must be a multiple");
        let f = new_root / self.base_root;
        Self::from_terms(new_root, self.trunc_m * f, self.terms().map(|(m, c)| (m * f, c)))
    }

    fn aligned(&self, other: &Self) -> (Self, Self) {
        let r = lcm(self.base_root, other.base_root);
        let a = self.rebase(r);
        let b = other.rebase(r);
        let t = a.trunc_m.min(b.trunc_m);
        (a.with_trunc(t), b.with_trunc(t))
    }

    pub fn with_trunc(&self, trunc_m: u32) -> Self {
        Self::from_terms(self.base_root, trunc_m, self.terms())
    }

    pub fn scale(&self, s: C) -> Self {
        Self::from_terms(self.base_root, self.trunc_m, self.terms().map(|(m, c)| (m, c * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (mut a, b) = self.aligned(other);
        for (m, c) in b.terms() {
            a.add_term(m, c);
        }
        a
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-C::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        let mut out = Self::zero(a.base_root, a.trunc_m);
        for (m1, c1) in a.terms() {
            for (m2, c2) in b.terms() {
                if m1 + m2 <= out.trunc_m {
                    out.add_term(m1 + m2, c1 * c2);
                }
            }
        }
        out
    }

    /// Multiply by `z^(-shift/r)`.
    pub fn shift(&self, shift: u32) -> Self {
        Self::from_terms(self.base_root, self.trunc_m, self.terms().map(|(m, c)| (m + shift, c)))
    }

    fn unit_check(&self) -> Result<()> {
        let c0 = self.coeff(0);
        if (c0 - C::one()).is_zero() {
            Ok(())
        } else {
            Err(Error::NonUnitLeadingTerm(c0.to_c64()))
        }
    }

    /// `1 / self` for a series with constant term exactly 1.
    pub fn reciprocal(&self) -> Result<Self> {
        self.unit_check()?;
        let n = self.trunc_m as usize;
        let a: Vec<C> = (0..=n).map(|m| self.coeff(m as u32)).collect();
        let mut b = vec![C::zero(); n + 1];
        b[0] = C::one();
        for m in 1..=n {
            let mut acc = C::zero();
            for i in 1..=m {
                acc = acc + a[i] * b[m - i];
            }
            b[m] = -acc;
        }
        Ok(Self::from_terms(self.base_root, self.trunc_m, b.into_iter().enumerate().map(|(m, c)| (m as u32, c))))
    }

    /// `self^(num/den)` by the generalized binomial series; constant term must be 1.
    pub fn fracpow(&self, num: i64, den: i64) -> Result<Self> {
        self.unit_check()?;
        let mut z = self.clone();
        z.coeffs.remove(&0);
        let binom = binomial_coeffs::<C>(num, den, self.trunc_m as usize);
        let mut out = Self::constant(self.base_root, self.trunc_m, C::one());
        let mut zp = Self::constant(self.base_root, self.trunc_m, C::one());
        for c in binom.iter().skip(1) {
            zp = zp.mul(&z);
            if zp.is_zero() {
                break;
            }
            out = out.add(&zp.scale(*c));
        }
        Ok(out)
    }

    pub fn map<D: Scalar>(&self, f: impl Fn(C) -> D) -> FracSeries1<D> {
        FracSeries1::from_terms(self.base_root, self.trunc_m, self.terms().map(|(m, c)| (m, f(c))))
    }

    /// Evaluate at `z` with `z^(-1/r)` on the principal branch.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_at_root(principal_inv_root(z, self.base_root))
    }

    /// Evaluate given `s = z^(-1/r)` directly (Horner in `s`).
    pub fn eval_at_root(&self, s: Complex64) -> Complex64 {
        let top = match self.coeffs.keys().next_back() {
            Some(&m) => m,
            None => return Complex64::new(0.0, 0.0),
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for m in (0..=top).rev() {
            acc = acc * s + self.coeff(m).to_c64();
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Series `Σ_n S_n(u) t^n` with `t = v^(-1/base_root_v)` and each `S_n` a
/// [`FracSeries1`] in `u`, truncated at `n <= trunc_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct FracSeries2<C: Scalar = Complex64> {
    outer: BTreeMap<u32, FracSeries1<C>>,
    base_root_v: u32,
    trunc_n: u32,
    inner_root: u32,
    inner_trunc: u32,
}

impl<C: Scalar> FracSeries2<C> {
    pub fn zero(base_root_v: u32, trunc_n: u32, inner_root: u32, inner_trunc: u32) -> Self {
        FracSeries2 { outer: BTreeMap::new(), base_root_v, trunc_n, inner_root, inner_trunc }
    }

    pub fn base_root_v(&self) -> u32 {
        self.base_root_v
    }

    pub fn trunc_n(&self) -> u32 {
        self.trunc_n
    }

    pub fn inner_root(&self) -> u32 {
        self.inner_root
    }

    pub fn inner_trunc(&self) -> u32 {
        self.inner_trunc
    }

    fn like(&self) -> Self {
        Self::zero(self.base_root_v, self.trunc_n, self.inner_root, self.inner_trunc)
    }

    pub fn is_zero(&self) -> bool {
        self.outer.is_empty()
    }

    /// Coefficient of `t^n` (zero series when absent).
    pub fn slot(&self, n: u32) -> FracSeries1<C> {
        self.outer.get(&n).cloned().unwrap_or_else(|| FracSeries1::zero(self.inner_root, self.inner_trunc))
    }

    pub fn slots(&self) -> impl Iterator<Item = (u32, &FracSeries1<C>)> + '_ {
        self.outer.iter().map(|(&n, s)| (n, s))
    }

    pub fn add_slot(&mut self, n: u32, s: &FracSeries1<C>) {
        if n > self.trunc_n {
            return;
        }
        let s = s.rebase(self.inner_root).with_trunc(self.inner_trunc);
        let cur = self.slot(n).add(&s);
        if cur.is_zero() {
            self.outer.remove(&n);
        } else {
            self.outer.insert(n, cur);
        }
    }

    pub fn add_term(&mut self, n: u32, m: u32, c: C) {
        let s = FracSeries1::from_terms(self.inner_root, self.inner_trunc, [(m, c)]);
        self.add_slot(n, &s);
    }

    pub fn constant(base_root_v: u32, trunc_n: u32, inner_root: u32, inner_trunc: u32, c: C) -> Self {
        let mut s = Self::zero(base_root_v, trunc_n, inner_root, inner_trunc);
        s.add_term(0, 0, c);
        s
    }

    fn check_compatible(&self, other: &Self) {
        assert_eq!(self.base_root_v, other.base_root_v, "v-roots must agree");
        assert_eq!(self.inner_root, other.inner_root, "u-roots must agree");
    }

    pub fn scale(&self, c: C) -> Self {
        let mut out = self.like();
        for (n, s) in self.slots() {
            out.add_slot(n, &s.scale(c));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let mut out = self.like();
        out.trunc_n = self.trunc_n.min(other.trunc_n);
        out.inner_trunc = self.inner_trunc.min(other.inner_trunc);
        for (n, s) in self.slots().chain(other.slots()) {
            out.add_slot(n, s);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-C::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let mut out = self.like();
        out.trunc_n = self.trunc_n.min(other.trunc_n);
        out.inner_trunc = self.inner_trunc.min(other.inner_trunc);
        for (n1, s1) in self.slots() {
            for (n2, s2) in other.slots() {
                if n1 + n2 <= out.trunc_n {
                    out.add_slot(n1 + n2, &s1.mul(s2));
                }
            }
        }
        out
    }

    /// Multiply every slot by the one-variable series `s`.
    pub fn mul_inner(&self, s: &FracSeries1<C>) -> Self {
        let mut out = self.like();
        for (n, slot) in self.slots() {
            out.add_slot(n, &slot.mul(s));
        }
        out
    }

    /// Multiply by `t^shift`.
    pub fn shift_t(&self, shift: u32) -> Self {
        let mut out = self.like();
        for (n, s) in self.slots() {
            out.add_slot(n + shift, s);
        }
        out
    }

    fn unit_check(&self) -> Result<()> {
        let c0 = self.slot(0).coeff(0);
        if (c0 - C::one()).is_zero() {
            Ok(())
        } else {
            Err(Error::NonUnitLeadingTerm(c0.to_c64()))
        }
    }

    pub fn reciprocal(&self) -> Result<Self> {
        self.fracpow(-1, 1)
    }

    /// `self^(num/den)` by the generalized binomial series; constant term must be 1.
    pub fn fracpow(&self, num: i64, den: i64) -> Result<Self> {
        self.unit_check()?;
        let z = self.sub(&Self::constant(self.base_root_v, self.trunc_n, self.inner_root, self.inner_trunc, C::one()));
        // every power of z raises the (n, m) degree by at least one
        let n_max = (self.trunc_n + self.inner_trunc + 1) as usize;
        let binom = binomial_coeffs::<C>(num, den, n_max);
        let one = Self::constant(self.base_root_v, self.trunc_n, self.inner_root, self.inner_trunc, C::one());
        let mut out = one.clone();
        let mut zp = one;
        for c in binom.iter().skip(1) {
            zp = zp.mul(&z);
            if zp.is_zero() {
                break;
            }
            out = out.add(&zp.scale(*c));
        }
        Ok(out)
    }

    pub fn map<D: Scalar>(&self, f: impl Fn(C) -> D + Copy) -> FracSeries2<D> {
        let mut out = FracSeries2::zero(self.base_root_v, self.trunc_n, self.inner_root, self.inner_trunc);
        for (n, s) in self.slots() {
            out.add_slot(n, &s.map(f));
        }
        out
    }

    /// Same series with the `t`-truncation changed (dropping slots beyond it).
    pub fn with_trunc_n(&self, trunc_n: u32) -> Self {
        let mut out = self.like();
        out.trunc_n = trunc_n;
        for (n, s) in self.slots() {
            out.add_slot(n, s);
        }
        out
    }

    pub fn eval(&self, u: Complex64, v: Complex64) -> Complex64 {
        let s = principal_inv_root(u, self.inner_root);
        let t = principal_inv_root(v, self.base_root_v);
        self.eval_at_roots(s, t)
    }

    /// Evaluate given `s = u^(-1/r_u)` and `t = v^(-1/r_v)` directly.
    pub fn eval_at_roots(&self, s: Complex64, t: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut tp = Complex64::new(1.0, 0.0);
        let mut last = 0;
        for (n, slot) in self.slots() {
            for _ in last..n {
                tp *= t;
            }
            last = n;
            acc += tp * slot.eval_at_root(s);
        }
        acc
    }
}
