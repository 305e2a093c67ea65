//! The chart `ψ₀(x, y) = (a y^k / x^k, b / y^{k-1})`, the sector regions and
//! the map `f₁ = ψ₀ ∘ f₀ ∘ ψ₀⁻¹` written without cancellation.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::normal_form::NormalGerm;
use crate::series::{binomial_coeffs, TruncPoly2};

/// Number of quasi-random samples used to certify a region.
pub const CERTIFY_SAMPLES: usize = 10_000;
/// Bound on `|v₁ - v - 1|` and `|(u₁ - u)v - 1|` required on the region
/// (half of the 1/2 the invariance argument needs).
pub const REMAINDER_MARGIN: f64 = 0.25;
pub const MAX_ESCALATIONS: u32 = 20;

pub fn chart_a(k: u32) -> f64 {
    -((k - 1) as f64) / k as f64
}

pub fn chart_b(k: u32) -> f64 {
    -1.0 / (k - 1) as f64
}

/// `r`-th root of `z` with the argument taken in `[-π/2, 3π/2)`.
///
/// On the sectors `a/u` and `b/v` lie near the negative real axis, so the
/// cut is moved onto the negative imaginary axis. The branch sends 1 to 1.
pub fn sector_root(z: Complex64, r: u32) -> Complex64 {
    if r == 1 {
        return z;
    }
    let mut arg = z.arg();
    if arg < -FRAC_PI_2 {
        arg += TAU;
    }
    Complex64::from_polar(z.norm().powf(1.0 / r as f64), arg / r as f64)
}

pub fn psi0(x: Complex64, y: Complex64, k: u32) -> Result<(Complex64, Complex64)> {
    if x == Complex64::new(0.0, 0.0) || y == Complex64::new(0.0, 0.0) {
        return Err(Error::ChartSingular);
    }
    let u = chart_a(k) * (y / x).powu(k);
    let v = chart_b(k) / y.powu(k - 1);
    Ok((u, v))
}

pub fn psi0_inverse(u: Complex64, v: Complex64, k: u32) -> Result<(Complex64, Complex64)> {
    if u == Complex64::new(0.0, 0.0) || v == Complex64::new(0.0, 0.0) {
        return Err(Error::ChartSingular);
    }
    let y = sector_root(chart_b(k) / v, k - 1);
    let x = sector_root(chart_a(k) / u, k) * y;
    Ok((x, y))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorParams {
    pub k: u32,
    pub r: f64,
    pub delta: f64,
    pub theta: f64,
}

impl SectorParams {
    pub fn new(k: u32, r: f64, delta: f64, theta: f64) -> Result<Self> {
        let s = SectorParams { k, r, delta, theta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParams(format!("k = {} < 2", self.k)));
        }
        if !(self.theta > 0.0 && self.theta < FRAC_PI_4) {
            return Err(Error::InvalidParams(format!("theta = {} not in (0, pi/4)", self.theta)));
        }
        if !(self.delta > 0.0 && self.delta <= 0.25) {
            return Err(Error::InvalidParams(format!("delta = {} not in (0, 0.25]", self.delta)));
        }
        if !(self.r >= 1.0) {
            return Err(Error::InvalidParams(format!("R = {} < 1", self.r)));
        }
        Ok(())
    }

    /// Exponent `(k-1)(k+1)/k` in `|u|^e < δ|v|`.
    pub fn uv_exponent(&self) -> f64 {
        let k = self.k as f64;
        (k - 1.0) * (k + 1.0) / k
    }
}

pub fn in_region_u(u: Complex64, s: &SectorParams) -> bool {
    u.re > s.r && u.arg().abs() < s.theta
}

pub fn in_region_uv(u: Complex64, v: Complex64, s: &SectorParams) -> bool {
    let k = s.k as f64;
    in_region_u(u, s) && u.norm().powf(s.uv_exponent()) < s.delta * v.norm() && v.arg().abs() < (k - 1.0) / k * s.theta
}

pub fn in_region_uw(u: Complex64, w: Complex64, s: &SectorParams) -> bool {
    in_region_uv(u, w, s)
}

/// Membership for points stored as `(τ̂, ω)` with `τ = τ̂ + log ω`.
pub fn in_region_tw(tau_hat: Complex64, w: Complex64, s: &SectorParams) -> bool {
    if w == Complex64::new(0.0, 0.0) {
        return false;
    }
    let k = s.k as f64;
    let tau = tau_hat + w.ln();
    tau.re > s.r
        && tau.norm() < s.delta * w.norm().powf(k / ((k - 1.0) * (k + 1.0)))
        && tau.arg().abs() < s.theta
        && w.arg().abs() < (k - 1.0) / k * s.theta
}

/// Terms of a polynomial flattened for fast evaluation.
#[derive(Clone, Debug)]
struct FlatPoly {
    terms: Vec<(usize, usize, Complex64)>,
}

impl FlatPoly {
    fn new(p: &TruncPoly2) -> Self {
        FlatPoly { terms: p.terms().map(|((i, j), c)| (i as usize, j as usize, c)).collect() }
    }

    fn eval(&self, xp: &[Complex64], yp: &[Complex64]) -> Complex64 {
        self.terms.iter().map(|&(i, j, c)| c * xp[i] * yp[j]).sum()
    }
}

/// `f₁` in the chart, evaluated through relative increments so that no
/// large quantities cancel.
#[derive(Clone, Debug)]
pub struct ChartMap {
    pub k: u32,
    r: FlatPoly,
    p: FlatPoly,
    q: FlatPoly,
    max_pow: usize,
    binom_k: Vec<f64>,
    binom_k1: Vec<f64>,
}

fn int_binomials(n: u32) -> Vec<f64> {
    binomial_coeffs::<Complex64>(n as i64, 1, n as usize).iter().map(|c| c.re).collect()
}

impl ChartMap {
    pub fn new(g: &NormalGerm) -> Self {
        ChartMap {
            k: g.k,
            r: FlatPoly::new(&g.r_poly),
            p: FlatPoly::new(&g.p_part),
            q: FlatPoly::new(&g.q_part),
            max_pow: g.base.trunc_order as usize + 1,
            binom_k: int_binomials(g.k),
            binom_k1: int_binomials(g.k - 1),
        }
    }

    /// One step `(u, v) ↦ (u₁, v₁)`.
    pub fn step(&self, u: Complex64, v: Complex64) -> Result<(Complex64, Complex64)> {
        let (du, dv) = self.increments(u, v)?;
        Ok((u + du, v + dv))
    }

    /// `(u₁ - u, v₁ - v)` computed without subtracting large numbers.
    pub fn increments(&self, u: Complex64, v: Complex64) -> Result<(Complex64, Complex64)> {
        let k = self.k as usize;
        let (x, y) = psi0_inverse(u, v, self.k)?;
        let mut xp = Vec::with_capacity(self.max_pow);
        let mut yp = Vec::with_capacity(self.max_pow);
        let (mut cx, mut cy) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        for _ in 0..self.max_pow {
            xp.push(cx);
            yp.push(cy);
            cx *= x;
            cy *= y;
        }
        let e = x * y * self.r.eval(&xp, &yp) + yp[k - 1];
        let p_x = self.p.eval(&xp, &yp) / x;
        let q_y = self.q.eval(&xp, &yp) / y;
        let xk_y = xp[k] / y;
        let z = e + xk_y + q_y;
        let d = (xk_y + q_y - p_x) / (1.0 + e + p_x);
        // u₁ = u(1 + D)^k and v₁ = v(1 + Z)^{-(k-1)}
        let mut du = Complex64::new(0.0, 0.0);
        let mut dp = d;
        for i in 1..=k {
            du += self.binom_k[i] * dp;
            dp *= d;
        }
        let mut dv = Complex64::new(0.0, 0.0);
        let mut zp = z;
        for i in 1..k {
            dv += self.binom_k1[i] * zp;
            zp *= z;
        }
        let one_z = (1.0 + z).powu(k as u32 - 1);
        Ok((u * du, -v * dv / one_z))
    }

    /// The germ `f₀` itself in normal-form coordinates.
    pub fn step_xy(&self, x: Complex64, y: Complex64) -> (Complex64, Complex64) {
        let k = self.k as usize;
        let mut xp = vec![Complex64::new(1.0, 0.0); self.max_pow];
        let mut yp = vec![Complex64::new(1.0, 0.0); self.max_pow];
        for i in 1..self.max_pow {
            xp[i] = xp[i - 1] * x;
            yp[i] = yp[i - 1] * y;
        }
        let e = x * y * self.r.eval(&xp, &yp) + yp[k - 1];
        (x * (1.0 + e) + self.p.eval(&xp, &yp), y * (1.0 + e) + xp[k] + self.q.eval(&xp, &yp))
    }
}

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Deterministic low-discrepancy points of the region, spread over
/// `(Re u, Arg u, log|v|, Arg v)`. Coordinates hug the boundaries
/// `Re u = R`, `|Arg| = θ` and `|u|^e = δ|v|` from inside.
pub fn sample_region(s: &SectorParams, n: usize) -> Vec<(Complex64, Complex64)> {
    sample_region_spans(s, n, 100.0, 1e6)
}

/// As [`sample_region`] with `Re u ∈ [R, u_span·R)` and `|v|` within a
/// factor `v_span` of its lower bound.
pub fn sample_region_spans(s: &SectorParams, n: usize, u_span: f64, v_span: f64) -> Vec<(Complex64, Complex64)> {
    let k = s.k as f64;
    (1..=n as u64)
        .map(|i| {
            let h = [2, 3, 5, 7].map(|b| radical_inverse(i, b));
            let re_u = s.r * (h[0] * u_span.ln()).exp() * (1.0 + 1e-12);
            let arg_u = s.theta * (2.0 * h[1] - 1.0) * (1.0 - 1e-9);
            let u = Complex64::new(re_u, re_u * arg_u.tan());
            let v_min = u.norm().powf(s.uv_exponent()) / s.delta;
            let mod_v = v_min * (h[2] * v_span.ln()).exp() * (1.0 + 1e-9);
            let arg_v = (k - 1.0) / k * s.theta * (2.0 * h[3] - 1.0) * (1.0 - 1e-9);
            (u, Complex64::from_polar(mod_v, arg_v))
        })
        .collect()
}

/// Low-discrepancy points `(τ̂, ω)` of the `(τ, ω)` region, with
/// `τ = τ̂ + log ω`; same boundary-hugging layout as [`sample_region`].
pub fn sample_region_tw(s: &SectorParams, n: usize) -> Vec<(Complex64, Complex64)> {
    let k = s.k as f64;
    (1..=n as u64)
        .map(|i| {
            let h = [2, 3, 5, 7].map(|b| radical_inverse(i, b));
            let re_t = s.r * (h[0] * 100f64.ln()).exp() * (1.0 + 1e-12);
            let arg_t = s.theta * (2.0 * h[1] - 1.0) * (1.0 - 1e-9);
            let tau = Complex64::new(re_t, re_t * arg_t.tan());
            let w_min = (tau.norm() / s.delta).powf(s.uv_exponent());
            let mod_w = w_min * (h[2] * 1e6f64.ln()).exp() * (1.0 + 1e-9);
            let arg_w = (k - 1.0) / k * s.theta * (2.0 * h[3] - 1.0) * (1.0 - 1e-9);
            let w = Complex64::from_polar(mod_w, arg_w);
            (tau - w.ln(), w)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionCertificate {
    pub params: SectorParams,
    pub samples: usize,
    pub invariance_failures: usize,
    pub remainder_failures: usize,
    /// Largest observed `|v₁ - v - 1|`.
    pub worst_v_remainder: f64,
    /// Largest observed `|(u₁ - u)v - 1|`.
    pub worst_u_remainder: f64,
    pub escalations: u32,
}

impl RegionCertificate {
    pub fn passed(&self) -> bool {
        self.invariance_failures == 0 && self.remainder_failures == 0
    }
}

/// Samples the region and checks `f₁(Ω) ⊆ Ω` and the remainder margins.
pub fn certify_region(g: &NormalGerm, s: &SectorParams, n: usize) -> Result<RegionCertificate> {
    s.validate()?;
    let map = ChartMap::new(g);
    let mut cert = RegionCertificate {
        params: *s,
        samples: n,
        invariance_failures: 0,
        remainder_failures: 0,
        worst_v_remainder: 0.0,
        worst_u_remainder: 0.0,
        escalations: 0,
    };
    for (u, v) in sample_region(s, n) {
        let (du, dv) = map.increments(u, v)?;
        if !in_region_uv(u + du, v + dv, s) {
            cert.invariance_failures += 1;
        }
        let rv = (dv - 1.0).norm();
        let ru = (du * v - 1.0).norm();
        cert.worst_v_remainder = cert.worst_v_remainder.max(rv);
        cert.worst_u_remainder = cert.worst_u_remainder.max(ru);
        if !(rv <= REMAINDER_MARGIN && ru <= REMAINDER_MARGIN) {
            cert.remainder_failures += 1;
        }
    }
    Ok(cert)
}

/// Starting point of the escalation in [`default_params`].
pub fn initial_params(k: u32) -> SectorParams {
    SectorParams { k, r: 32.0, delta: 0.05, theta: FRAC_PI_8 }
}

/// First `(R, δ, θ)` along `R ← 2R`, `δ ← δ/2` that passes [`certify_region`].
pub fn default_params(g: &NormalGerm) -> Result<(SectorParams, RegionCertificate)> {
    let mut s = initial_params(g.k);
    for esc in 0..=MAX_ESCALATIONS {
        let mut cert = certify_region(g, &s, CERTIFY_SAMPLES)?;
        cert.escalations = esc;
        if cert.passed() {
            return Ok((s, cert));
        }
        s.r *= 2.0;
        s.delta /= 2.0;
    }
    Err(Error::CannotCertifyRegion { escalations: MAX_ESCALATIONS })
}

/// Principal argument folded to `(-π, π]`, for display.
pub fn wrap_angle(t: f64) -> f64 {
    let mut t = t % TAU;
    if t <= -PI {
        t += TAU;
    } else if t > PI {
        t -= TAU;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::parse_germ;
    use crate::normal_form::normalize;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_one_one() -> NormalGerm {
        normalize(&parse_germ("1 1 1 1 0\n2 0 2 1 0\n2 2 0 1 0\n").unwrap()).unwrap()
    }

    #[test]
    fn psi0_examples() {
        assert_eq!(psi0(c(1.0, 0.0), c(1.0, 0.0), 2).unwrap(), (c(-0.5, 0.0), c(-1.0, 0.0)));
        let (u, v) = psi0(c(1.0, 0.0), c(1.0, 0.0), 3).unwrap();
        assert!((u - c(-2.0 / 3.0, 0.0)).norm() < 1e-15 && (v - c(-0.5, 0.0)).norm() < 1e-15);
        let (u, v) = psi0(c(0.0, 1.0), c(0.0, 1.0), 2).unwrap();
        assert!((u - c(-0.5, 0.0)).norm() < 1e-15 && (v - c(0.0, 1.0)).norm() < 1e-15);
        assert!(matches!(psi0(c(0.0, 0.0), c(1.0, 0.0), 2), Err(Error::ChartSingular)));
    }

    #[test]
    fn inverse_sends_ab_to_one() {
        for k in 2..=5 {
            let (x, y) = psi0_inverse(c(chart_a(k), 0.0), c(chart_b(k), 0.0), k).unwrap();
            assert_eq!((x, y), (c(1.0, 0.0), c(1.0, 0.0)), "k = {k}");
        }
    }

    #[test]
    fn inverse_branch_example() {
        let u = chart_a(2) * Complex64::from_polar(1.0, PI / 8.0);
        let (x, y) = psi0_inverse(u, c(-1.0, 0.0), 2).unwrap();
        assert!((x - Complex64::from_polar(1.0, -PI / 16.0)).norm() < 1e-15);
        assert!((y - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn round_trip_near_origin() {
        let (x, y) = (c(0.1, 0.0), 0.1 * Complex64::from_polar(1.0, PI / 16.0));
        let (u, v) = psi0(x, y, 2).unwrap();
        let (x2, y2) = psi0_inverse(u, v, 2).unwrap();
        assert!((x2 - x).norm() < 1e-12 && (y2 - y).norm() < 1e-12);
    }

    #[test]
    fn region_examples() {
        let s = SectorParams::new(2, 50.0, 0.01, PI / 8.0).unwrap();
        assert!(in_region_uv(c(100.0, 0.0), c(1e8, 0.0), &s));
        assert!(!in_region_uv(c(10.0, 0.0), c(1e8, 0.0), &s));
        assert!(!in_region_uv(c(100.0, 0.0), Complex64::from_polar(1e4, PI / 4.0), &s));
    }

    #[test]
    fn params_are_validated() {
        assert!(SectorParams::new(2, 32.0, 0.05, PI / 4.0).is_err());
        assert!(SectorParams::new(2, 32.0, 0.5, PI / 8.0).is_err());
        assert!(SectorParams::new(2, 0.5, 0.05, PI / 8.0).is_err());
        assert!(SectorParams::new(1, 32.0, 0.05, PI / 8.0).is_err());
    }

    #[test]
    fn samples_lie_in_region_and_round_trip() {
        for k in 2..=4 {
            let s = SectorParams::new(k, 32.0, 0.05, PI / 8.0).unwrap();
            for (u, v) in sample_region(&s, 2000) {
                assert!(in_region_uv(u, v, &s));
                let (x, y) = psi0_inverse(u, v, k).unwrap();
                let (u2, v2) = psi0(x, y, k).unwrap();
                assert!((u2 - u).norm() <= 1e-12 * u.norm(), "k={k} u={u} u2={u2}");
                assert!((v2 - v).norm() <= 1e-12 * v.norm());
            }
        }
    }

    #[test]
    fn chart_map_matches_direct_conjugation() {
        let g = one_one_one();
        let map = ChartMap::new(&g);
        let (u, v) = (c(40.0, 3.0), c(5e4, 800.0));
        let (x, y) = psi0_inverse(u, v, 2).unwrap();
        // direct: f₀(x,y) = (x + xy, y + y² + x²)
        let (x1, y1) = (x + x * y, y + y * y + x * x);
        let (u1, v1) = psi0(x1, y1, 2).unwrap();
        let (u1b, v1b) = map.step(u, v).unwrap();
        assert!((u1 - u1b).norm() < 1e-12 * u.norm());
        assert!((v1 - v1b).norm() < 1e-12 * v.norm());
        let (x2, y2) = map.step_xy(x, y);
        assert!((x2 - x1).norm() < 1e-15 * x.norm() && (y2 - y1).norm() < 1e-15 * y.norm());
    }

    #[test]
    fn default_params_certify_one_one_one() {
        let g = one_one_one();
        let (s, cert) = default_params(&g).unwrap();
        assert!(cert.passed());
        assert_eq!(s.theta, FRAC_PI_8);
    }

    #[test]
    fn small_r_large_delta_fails_certification() {
        let g = one_one_one();
        let s = SectorParams { k: 2, r: 1.0, delta: 0.25, theta: PI / 5.0 };
        let cert = certify_region(&g, &s, 2000).unwrap();
        assert!(!cert.passed());
    }
}
