//! The correctors `φ_j` solving `φ_j' + F_j φ_j = G_j`.
//!
//! Production values come from a Taylor march along the segment `u₀ → u`:
//! around each centre `c` every forcing term is a power `u^p`, whose Taylor
//! coefficients obey a two-term recurrence, so the ODE system can be
//! integrated to high order with steps of a quarter of `|c|`. The integral
//! formula is kept as an independent oracle
//! (`φ_j(u) = ∫ G_j(ν) e^{I_j(ν) - I_j(u)} dν`, `I_j' = F_j`).

use num_complex::Complex64;

use super::quad::integrate_segment;
use crate::error::{Error, Result};
use crate::expansion::ExpansionPack;
use crate::series::FracSeries1;

/// Degree of the local Taylor polynomials.
pub const TAYLOR_ORDER: usize = 30;
/// Upper bound on a march step; keeps `e^{-F h}` well inside the radius.
pub const MAX_STEP: f64 = 4.0;
/// Step as a fraction of `|c|`, the distance to the branch point.
pub const STEP_FRACTION: f64 = 0.25;
/// Absolute tolerance of the quadrature oracle.
pub const QUAD_TOL: f64 = 1e-12;

type C64 = Complex64;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// `Σ c u^p` stored as `(p, c)` pairs.
type PowerSum = Vec<(f64, C64)>;

fn power_sum(s: &FracSeries1, shift: f64) -> PowerSum {
    let r = s.base_root() as f64;
    s.terms().map(|(m, c)| (shift - m as f64 / r, c)).collect()
}

fn eval_power_sum(ps: &PowerSum, u: C64) -> C64 {
    ps.iter().map(|&(p, c)| if p == 0.0 { c } else { c * u.powf(p) }).sum()
}

/// Taylor coefficients of `u^p` about `c` (principal branch).
fn power_taylor(p: f64, c: C64, out: &mut [C64]) {
    let mut e = if p == 0.0 { C64::new(1.0, 0.0) } else { c.powf(p) };
    for (n, slot) in out.iter_mut().enumerate() {
        *slot = e;
        e = e * (p - n as f64) / ((n + 1) as f64 * c);
    }
}

fn sum_taylor(ps: &PowerSum, c: C64, len: usize) -> Vec<C64> {
    let mut acc = vec![zero(); len];
    let mut tmp = vec![zero(); len];
    for &(p, coeff) in ps {
        power_taylor(p, c, &mut tmp);
        for (a, t) in acc.iter_mut().zip(&tmp) {
            *a += coeff * t;
        }
    }
    acc
}

/// `(a * b)[n]` for truncated series.
fn conv_at(a: &[C64], b: &[C64], n: usize) -> C64 {
    (0..=n).map(|i| a[i] * b[n - i]).sum()
}

fn horner(a: &[C64], h: C64) -> C64 {
    a.iter().rev().fold(zero(), |acc, &x| acc * h + x)
}

fn horner_deriv(a: &[C64], h: C64) -> C64 {
    a.iter().enumerate().skip(1).rev().fold(zero(), |acc, (n, &x)| acc * h + x * n as f64)
}

/// `φ_j(u)`, `φ_j'(u)` and the integrals `α_l(u) = ∫_{u₀}^u φ₀^l`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectorValues {
    pub phi: Vec<C64>,
    /// Derivative of the local Taylor polynomial.
    pub dphi: Vec<C64>,
    /// `α_1..α_k`.
    pub alpha_l: Vec<C64>,
}

impl CorrectorValues {
    /// `α = Σ_{l=1}^k (-1)^l α_l`.
    pub fn alpha(&self) -> C64 {
        self.alpha_l.iter().enumerate().map(|(i, &a)| if i % 2 == 0 { -a } else { a }).sum()
    }
}

#[derive(Clone, Debug)]
pub struct CorrectorSet {
    pub k: u32,
    pub u0: f64,
    /// `g_j` as power sums.
    g: Vec<PowerSum>,
    /// `u^{(k+1)/k} h_j`.
    hh: Vec<PowerSum>,
    /// Correctors forced to vanish (mutation testing only).
    zeroed: Vec<bool>,
}

impl CorrectorSet {
    /// Weight `(k-1-j)/(k-1)` of `F_j`.
    fn weight(&self, j: usize) -> f64 {
        (self.k as usize - 1 - j) as f64 / (self.k - 1) as f64
    }

    /// A copy with `φ_j` replaced by zero; used as a negative control.
    pub fn with_zeroed(&self, j: usize) -> Self {
        let mut c = self.clone();
        c.zeroed[j] = true;
        c
    }

    /// `F_j(u)` and `G_j(u)` for all `j`, given the corrector values.
    pub fn forcing(&self, u: C64, phi: &[C64], dphi: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let k = self.k as usize;
        let g: Vec<C64> = self.g.iter().map(|ps| eval_power_sum(ps, u)).collect();
        let hh: Vec<C64> = self.hh.iter().map(|ps| eval_power_sum(ps, u)).collect();
        let f = (0..k).map(|j| self.weight(j) * (1.0 + g[0])).collect();
        let gg = (0..k)
            .map(|j| {
                let mut s = g[j];
                for l in 0..j {
                    s += self.weight(l) * phi[l] * g[j - l] + dphi[l] * hh[j - l - 1];
                }
                -s
            })
            .collect();
        (f, gg)
    }

    /// One Taylor step about `c`: coefficient arrays of `φ_j` and `α_l`.
    fn taylor_at(&self, c: C64, phi0: &[C64], alpha0: &[C64]) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
        let k = self.k as usize;
        let len = TAYLOR_ORDER + 1;
        let gs: Vec<Vec<C64>> = self.g.iter().map(|ps| sum_taylor(ps, c, len)).collect();
        let hs: Vec<Vec<C64>> = self.hh.iter().map(|ps| sum_taylor(ps, c, len)).collect();
        let one_g: Vec<C64> = (0..len).map(|n| gs[0][n] + if n == 0 { 1.0 } else { 0.0 }).collect();

        let mut phi = vec![vec![zero(); len]; k];
        let mut dphi = vec![vec![zero(); len]; k];
        for j in 0..k {
            phi[j][0] = if self.zeroed[j] { zero() } else { phi0[j] };
        }
        for n in 0..TAYLOR_ORDER {
            for j in 0..k {
                let mut g = gs[j][n];
                for l in 0..j {
                    g += self.weight(l) * conv_at(&phi[l], &gs[j - l], n) + conv_at(&dphi[l], &hs[j - l - 1], n);
                }
                let fphi = self.weight(j) * conv_at(&one_g, &phi[j], n);
                let next = if self.zeroed[j] { zero() } else { (-g - fphi) / (n + 1) as f64 };
                phi[j][n + 1] = next;
                dphi[j][n] = next * (n + 1) as f64;
            }
        }

        let mut alpha = Vec::with_capacity(k);
        let mut power = phi[0].clone();
        for l in 0..k {
            if l > 0 {
                power = (0..len).map(|n| conv_at(&power, &phi[0], n)).collect();
            }
            let mut a = vec![zero(); len];
            a[0] = alpha0[l];
            for n in 0..TAYLOR_ORDER {
                a[n + 1] = power[n] / (n + 1) as f64;
            }
            alpha.push(a);
        }
        (phi, alpha)
    }

    /// Marches from `u₀` to `u` and returns the corrector values there.
    pub fn evaluate(&self, u: C64) -> Result<CorrectorValues> {
        let k = self.k as usize;
        let start = CorrectorValues { phi: vec![zero(); k], dphi: vec![zero(); k], alpha_l: vec![zero(); k] };
        self.continue_from(C64::new(self.u0, 0.0), &start, u)
    }

    /// Continues known values at `from` along the segment to `to`. Both
    /// ends must lie in the open right half plane, where the correctors are
    /// single valued.
    pub fn continue_from(&self, from: C64, at_from: &CorrectorValues, to: C64) -> Result<CorrectorValues> {
        for z in [from, to] {
            if !z.is_finite() || z.re <= 0.0 {
                return Err(Error::OutOfRegion { u: z, v: zero() });
            }
        }
        let total = (to - from).norm();
        if total == 0.0 {
            return Ok(at_from.clone());
        }
        let dir = (to - from) / total;
        let mut c = from;
        let mut done = 0.0;
        let mut phi = at_from.phi.clone();
        let mut alpha = at_from.alpha_l.clone();
        loop {
            let step = (STEP_FRACTION * c.norm()).min(MAX_STEP);
            let last = total - done <= step;
            let h = if last { total - done } else { step };
            let (tp, ta) = self.taylor_at(c, &phi, &alpha);
            let hc = dir * h;
            if last {
                return Ok(CorrectorValues {
                    phi: tp.iter().map(|a| horner(a, hc)).collect(),
                    dphi: tp.iter().map(|a| horner_deriv(a, hc)).collect(),
                    alpha_l: ta.iter().map(|a| horner(a, hc)).collect(),
                });
            }
            phi = tp.iter().map(|a| horner(a, hc)).collect();
            alpha = ta.iter().map(|a| horner(a, hc)).collect();
            done += h;
            c = from + dir * done;
        }
    }

    /// `I_j(ν) = w_j ((ν - u₀) + ∫_{u₀}^ν g₀)` in closed form.
    fn exponent(&self, j: usize, nu: C64) -> C64 {
        let anti = |z: C64| -> C64 {
            self.g[0]
                .iter()
                .map(|&(p, c)| if (p + 1.0).abs() < 1e-12 { c * z.ln() } else { c * z.powf(p + 1.0) / (p + 1.0) })
                .sum()
        };
        let u0 = C64::new(self.u0, 0.0);
        self.weight(j) * ((nu - u0) + anti(nu) - anti(u0))
    }

    /// `(φ_j(u), φ_j'(u))` by adaptive quadrature of the integral formula,
    /// recursing into `φ_l`, `l < j`, at every node.
    pub fn quadrature(&self, j: usize, u: C64) -> Result<(C64, C64)> {
        let k = self.k as usize;
        if j >= k {
            return Err(Error::IndexOutOfRange { index: j, max: k - 1 });
        }
        if self.zeroed[j] {
            return Ok((zero(), zero()));
        }
        let lower = |nu: C64| -> Result<(Vec<C64>, Vec<C64>)> {
            let mut p = vec![zero(); k];
            let mut d = vec![zero(); k];
            for l in 0..j {
                let (a, b) = self.quadrature(l, nu)?;
                p[l] = a;
                d[l] = b;
            }
            Ok((p, d))
        };
        let iu = self.exponent(j, u);
        let integrand = |nu: C64| -> Result<C64> {
            let (p, d) = lower(nu)?;
            let (_, g) = self.forcing(nu, &p, &d);
            Ok(g[j] * (self.exponent(j, nu) - iu).exp())
        };
        let phi = integrate_segment(integrand, C64::new(self.u0, 0.0), u, QUAD_TOL)?;
        let (p, d) = lower(u)?;
        let (f, g) = self.forcing(u, &p, &d);
        Ok((phi, g[j] - f[j] * phi))
    }
}

/// Builds the correctors for `pack` with basepoint `u0`.
pub fn solve_correctors(pack: &ExpansionPack, u0: f64) -> Result<CorrectorSet> {
    let k = pack.k;
    if k < 2 || !(u0 > 0.0) {
        return Err(Error::InvalidParams(format!("basepoint u0 = {u0} must be positive")));
    }
    let lift = (k + 1) as f64 / k as f64;
    Ok(CorrectorSet {
        k,
        u0,
        g: pack.g_j.iter().map(|s| power_sum(s, 0.0)).collect(),
        hh: pack.h_j.iter().map(|s| power_sum(s, lift)).collect(),
        zeroed: vec![false; k as usize],
    })
}
