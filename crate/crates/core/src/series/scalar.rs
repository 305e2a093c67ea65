//! Coefficient types for the truncated series.
//!
//! `Complex64` is the working type. `ComplexDd` carries roughly 30 significant
//! digits (double-double) and is used to cross-check expansions.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_c64(z: Complex64) -> Self;
    /// `num / den`, rounded once in the working precision.
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_c64(self) -> Complex64;
    fn is_zero(&self) -> bool;
    fn norm(&self) -> f64 {
        self.to_c64().norm()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_c64(z: Complex64) -> Self {
        z
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }
    fn to_c64(self) -> Complex64 {
        self
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        // one Newton step on top of the double estimate
        let x = Dd::new(self.hi.sqrt());
        x + (self - x * x) / (Dd::new(2.0) * x)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ComplexDd {
    pub re: Dd,
    pub im: Dd,
}

impl ComplexDd {
    pub fn new(re: Dd, im: Dd) -> Self {
        ComplexDd { re, im }
    }

    pub fn norm_sqr(self) -> Dd {
        self.re * self.re + self.im * self.im
    }

    /// Refine `guess` to a root of `z^n = target` by Newton steps in double-double.
    pub fn refine_root(target: ComplexDd, n: u32, guess: Complex64) -> ComplexDd {
        let mut z = ComplexDd::from_c64(guess);
        let nn = ComplexDd::from_ratio(n as i64, 1);
        for _ in 0..3 {
            let mut zn1 = ComplexDd::one();
            for _ in 0..n - 1 {
                zn1 = zn1 * z;
            }
            let f = zn1 * z - target;
            z = z - f / (nn * zn1);
        }
        z
    }
}

impl Add for ComplexDd {
    type Output = ComplexDd;
    fn add(self, o: Self) -> Self {
        ComplexDd::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for ComplexDd {
    type Output = ComplexDd;
    fn sub(self, o: Self) -> Self {
        ComplexDd::new(self.re - o.re, self.im - o.im)
    }
}

impl Neg for ComplexDd {
    type Output = ComplexDd;
    fn neg(self) -> Self {
        ComplexDd::new(-self.re, -self.im)
    }
}

impl Mul for ComplexDd {
    type Output = ComplexDd;
    fn mul(self, o: Self) -> Self {
        ComplexDd::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

impl Div for ComplexDd {
    type Output = ComplexDd;
    fn div(self, o: Self) -> Self {
        let d = o.norm_sqr();
        ComplexDd::new((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)
    }
}

impl Scalar for ComplexDd {
    fn zero() -> Self {
        ComplexDd::default()
    }
    fn one() -> Self {
        ComplexDd::new(Dd::new(1.0), Dd::ZERO)
    }
    fn from_c64(z: Complex64) -> Self {
        ComplexDd::new(Dd::new(z.re), Dd::new(z.im))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        ComplexDd::new(Dd::new(num as f64) / Dd::new(den as f64), Dd::ZERO)
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
    fn is_zero(&self) -> bool {
        self.re.hi == 0.0 && self.re.lo == 0.0 && self.im.hi == 0.0 && self.im.lo == 0.0
    }
    fn norm(&self) -> f64 {
        self.norm_sqr().sqrt().to_f64()
    }
}
