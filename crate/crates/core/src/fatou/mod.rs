//! Fatou coordinate `ω` and conjugacy coordinate `τ`.
//!
//! `w = v (1 + Σ_j φ_j(u) v^{-j/(k-1)})` is an approximate Fatou coordinate;
//! `ω = lim (w_n - n)` and `τ = lim (u_n - log ω_n + α(u_n))` along exact
//! orbits of the chart map. Orbit coordinates are accumulated with
//! compensated sums, since `v_n` grows linearly and the quantities of
//! interest are `O(1)` differences.

pub mod checks;
pub mod correctors;
pub mod extend;
pub mod quad;

use num_complex::Complex64;

pub use checks::{check_injectivity, check_orbit_bounds, write_orbit_csv, BoundsReport, InjectivityReport, Which};
pub use correctors::{solve_correctors, CorrectorSet, CorrectorValues};
pub use extend::{extend_along_orbit, find_entry, Entry, Verdict};

use crate::coords::{in_region_uv, ChartMap, SectorParams};
use crate::error::{Error, Result};
use crate::expansion::{build_expansion, ExpansionPack};
use crate::normal_form::NormalGerm;
use crate::series::scalar::two_sum;
use crate::series::{principal_inv_root, Precision};

type C64 = Complex64;

/// Doubling-gap tolerance of the limits.
pub const EPS_TAIL: f64 = 1e-9;
pub const N_MIN: u64 = 64;
pub const N_MAX: u64 = 1 << 20;
/// Basepoint of the correctors as a fraction of `R`.
pub const BASEPOINT_FRACTION: f64 = 0.75;
/// Secant iterations when recovering `v` from `ω`.
const MAX_SECANT: usize = 40;

/// Checkpoints `n_min · 2^i ≤ n_max` and the Cauchy tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitPolicy {
    pub n_min: u64,
    pub n_max: u64,
    pub eps_tail: f64,
}

impl Default for OrbitPolicy {
    fn default() -> Self {
        OrbitPolicy { n_min: N_MIN, n_max: N_MAX, eps_tail: EPS_TAIL }
    }
}

impl OrbitPolicy {
    pub fn with_n_max(n_max: u64) -> Self {
        OrbitPolicy { n_max, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 || self.n_max < self.n_min || !(self.eps_tail > 0.0) {
            return Err(Error::InvalidParams(format!("bad orbit policy {self:?}")));
        }
        Ok(())
    }

    fn checkpoints(&self) -> Vec<u64> {
        let mut out = vec![self.n_min];
        while out.last().unwrap() * 2 <= self.n_max {
            out.push(out.last().unwrap() * 2);
        }
        out
    }
}

/// Everything needed to evaluate `w`, `ω`, `α` and `τ`. Immutable and
/// shareable between threads.
#[derive(Clone, Debug)]
pub struct FatouContext {
    pub germ: NormalGerm,
    pub pack: ExpansionPack,
    pub correctors: CorrectorSet,
    pub params: SectorParams,
    pub policy: OrbitPolicy,
    pub map: ChartMap,
}

/// A limit `lim_n a_n` evaluated at doubling checkpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitReport {
    pub value: C64,
    /// Checkpoint at which `value` was taken.
    pub n: u64,
    /// `|a_n - a_{n/2}|` at the last checkpoint.
    pub tail_gap: f64,
    /// Every `(n, |a_n - a_{n/2}|)`.
    pub gaps: Vec<(u64, f64)>,
    pub converged: bool,
    /// Extrapolation in `n^{-1/k}` from the last two checkpoints, reported
    /// alongside and never substituted.
    pub richardson: C64,
}

impl LimitReport {
    pub fn low_confidence(&self) -> bool {
        !self.converged
    }
}

/// Both limits along one orbit, with the terminal state.
#[derive(Clone, Debug, PartialEq)]
pub struct FatouReport {
    pub omega: LimitReport,
    pub tau: LimitReport,
    pub u_n: C64,
    pub v_n: C64,
    /// `|w_{N+1} - w_N - 1|` at the terminal checkpoint.
    pub step_residual: f64,
    /// Proof-shaped tail envelope at `N` (unit constant):
    /// `(k-1)|u_N|^{(2k-1)/k}|v_N|^{-1/(k-1)} + k|u_N|^{-1/k}`.
    pub envelope: f64,
}

/// Complex value kept as an unevaluated sum `hi + lo`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Compensated {
    pub hi: C64,
    pub lo: C64,
}

impl Compensated {
    pub fn new(z: C64) -> Self {
        Compensated { hi: z, lo: C64::new(0.0, 0.0) }
    }

    pub fn add(&mut self, d: C64) {
        let (re, e1) = two_sum(self.hi.re, d.re);
        let (im, e2) = two_sum(self.hi.im, d.im);
        let (re, f1) = two_sum(re, self.lo.re + e1);
        let (im, f2) = two_sum(im, self.lo.im + e2);
        self.hi = C64::new(re, im);
        self.lo = C64::new(f1, f2);
    }

    pub fn value(&self) -> C64 {
        self.hi + self.lo
    }

    /// `hi + lo - n` without rounding `hi` first.
    pub fn minus(&self, n: f64) -> C64 {
        (self.hi - n) + self.lo
    }
}

/// An orbit of the chart map, checked against the region at every step.
#[derive(Clone, Debug)]
pub struct Orbit<'a> {
    ctx: &'a FatouContext,
    pub u: Compensated,
    pub v: Compensated,
    pub n: u64,
}

impl<'a> Orbit<'a> {
    pub fn new(ctx: &'a FatouContext, u: C64, v: C64) -> Result<Self> {
        if !in_region_uv(u, v, &ctx.params) {
            return Err(Error::OutOfRegion { u, v });
        }
        Ok(Orbit { ctx, u: Compensated::new(u), v: Compensated::new(v), n: 0 })
    }

    pub fn step(&mut self) -> Result<()> {
        let (du, dv) = self.ctx.map.increments(self.u.hi, self.v.hi)?;
        self.u.add(du);
        self.v.add(dv);
        self.n += 1;
        if !in_region_uv(self.u.hi, self.v.hi, &self.ctx.params) {
            return Err(Error::InvarianceViolation { step: self.n });
        }
        Ok(())
    }

    pub fn advance_to(&mut self, n: u64) -> Result<()> {
        while self.n < n {
            self.step()?;
        }
        Ok(())
    }

    /// `w_n - n` from corrector values at `u_n`.
    pub fn w_minus_n(&self, vals: &CorrectorValues) -> C64 {
        self.ctx.correction(self.v.hi, vals) + self.v.minus(self.n as f64)
    }
}

/// Corrector values carried along an orbit by short continuations.
struct Tracker<'a> {
    set: &'a CorrectorSet,
    at: C64,
    vals: CorrectorValues,
}

impl<'a> Tracker<'a> {
    fn new(set: &'a CorrectorSet, u: C64) -> Result<Self> {
        Ok(Tracker { set, at: u, vals: set.evaluate(u)? })
    }

    fn move_to(&mut self, u: C64) -> Result<&CorrectorValues> {
        self.vals = self.set.continue_from(self.at, &self.vals, u)?;
        self.at = u;
        Ok(&self.vals)
    }
}

fn richardson(k: u32, coarse: C64, fine: C64) -> C64 {
    let r = 2f64.powf(1.0 / k as f64);
    (r * fine - coarse) / (r - 1.0)
}

impl FatouContext {
    /// Builds the expansion and correctors with basepoint `u₀ = 0.75 R`.
    pub fn new(germ: &NormalGerm, params: SectorParams, policy: OrbitPolicy) -> Result<Self> {
        Self::with_precision(germ, params, policy, Precision::Double)
    }

    /// As [`FatouContext::new`] with the series algebra in `precision`.
    pub fn with_precision(
        germ: &NormalGerm,
        params: SectorParams,
        policy: OrbitPolicy,
        precision: Precision,
    ) -> Result<Self> {
        params.validate()?;
        policy.validate()?;
        if params.k != germ.k {
            return Err(Error::InvalidParams(format!("params for k = {} used with k = {}", params.k, germ.k)));
        }
        let pack = build_expansion(germ, precision)?;
        let correctors = solve_correctors(&pack, BASEPOINT_FRACTION * params.r)?;
        Ok(FatouContext { germ: germ.clone(), pack, correctors, params, policy, map: ChartMap::new(germ) })
    }

    pub fn with_policy(&self, policy: OrbitPolicy) -> Self {
        FatouContext { policy, ..self.clone() }
    }

    /// The same context with different correctors (mutation testing).
    pub fn with_correctors(&self, correctors: CorrectorSet) -> Self {
        FatouContext { correctors, ..self.clone() }
    }

    /// One step of the germ in its original coordinates.
    pub fn step_original(&self, x: C64, y: C64) -> (C64, C64) {
        let (xn, yn) = self.germ.conj.to_normal(x, y);
        let (x1, y1) = self.map.step_xy(xn, yn);
        self.germ.conj.to_original(x1, y1)
    }

    /// `w - v = Σ_j φ_j(u) v^{1 - j/(k-1)}`.
    fn correction(&self, v: C64, vals: &CorrectorValues) -> C64 {
        let t = principal_inv_root(v, self.params.k - 1);
        let mut tj = v;
        let mut s = C64::new(0.0, 0.0);
        for p in &vals.phi {
            s += p * tj;
            tj *= t;
        }
        s
    }

    /// `w(u, v) = v (1 + Σ φ_j(u) v^{-j/(k-1)})`.
    pub fn w_of(&self, u: C64, v: C64) -> Result<C64> {
        if !in_region_uv(u, v, &self.params) {
            return Err(Error::OutOfRegion { u, v });
        }
        let vals = self.correctors.evaluate(u)?;
        Ok(v + self.correction(v, &vals))
    }

    /// `α(u) = Σ_{l=1}^k (-1)^l ∫_{u₀}^u φ₀^l`.
    pub fn alpha_of(&self, u: C64) -> Result<C64> {
        Ok(self.correctors.evaluate(u)?.alpha())
    }

    /// Runs the orbit of `(u, v)` through the checkpoints and evaluates
    /// `w_n - n` and `t_n = u_n - log w_n + α(u_n)` at each.
    pub fn limits(&self, u: C64, v: C64) -> Result<FatouReport> {
        let k = self.params.k;
        let mut orbit = Orbit::new(self, u, v)?;
        let mut tracker = Tracker::new(&self.correctors, u)?;
        let mut omegas: Vec<C64> = Vec::new();
        let mut taus: Vec<C64> = Vec::new();
        let mut gaps_w = Vec::new();
        let mut gaps_t = Vec::new();
        let mut converged = (false, false);
        for n in self.policy.checkpoints() {
            orbit.advance_to(n)?;
            let vals = tracker.move_to(orbit.u.hi)?;
            let om = orbit.w_minus_n(vals);
            let w = om + n as f64;
            let t = orbit.u.value() - w.ln() + vals.alpha();
            if let (Some(po), Some(pt)) = (omegas.last(), taus.last()) {
                let (gw, gt) = ((om - po).norm(), (t - pt).norm());
                gaps_w.push((n, gw));
                gaps_t.push((n, gt));
                converged = (gw < self.policy.eps_tail, gt < self.policy.eps_tail);
            }
            omegas.push(om);
            taus.push(t);
            if converged.0 && converged.1 {
                break;
            }
        }
        let n = orbit.n;
        let (u_n, v_n) = (orbit.u.value(), orbit.v.value());
        // one more step for the residual w_{N+1} - w_N - 1
        let om_n = *omegas.last().unwrap();
        orbit.step()?;
        let next = tracker.move_to(orbit.u.hi)?;
        let step_residual = (orbit.w_minus_n(next) - om_n).norm();
        let kf = k as f64;
        let envelope = (kf - 1.0) * u_n.norm().powf((2.0 * kf - 1.0) / kf) * v_n.norm().powf(-1.0 / (kf - 1.0))
            + kf * u_n.norm().powf(-1.0 / kf);
        let limit = |vals: &[C64], gaps: Vec<(u64, f64)>, conv: bool| {
            let last = *vals.last().unwrap();
            let rich = if vals.len() >= 2 { richardson(k, vals[vals.len() - 2], last) } else { last };
            LimitReport {
                value: last,
                n,
                tail_gap: gaps.last().map_or(f64::INFINITY, |g| g.1),
                gaps,
                converged: conv,
                richardson: rich,
            }
        };
        Ok(FatouReport {
            omega: limit(&omegas, gaps_w, converged.0),
            tau: limit(&taus, gaps_t, converged.1),
            u_n,
            v_n,
            step_residual,
            envelope,
        })
    }

    /// The Fatou coordinate `ω(u, v)`.
    pub fn omega(&self, u: C64, v: C64) -> Result<LimitReport> {
        Ok(self.limits(u, v)?.omega)
    }

    /// `τ` at a point given in `(u, v)`.
    pub fn tau_uv(&self, u: C64, v: C64) -> Result<LimitReport> {
        Ok(self.limits(u, v)?.tau)
    }

    /// Recovers `v` with `ω(u, v) = ω`: Newton on `w(u, ·)` for a start,
    /// then secant on `ω(u, ·)`.
    pub fn v_from_omega(&self, u: C64, omega: C64) -> Result<C64> {
        let fail = || Error::InverseRecovery(omega);
        let vals = self.correctors.evaluate(u)?;
        let k = self.params.k as f64;
        let mut v = omega;
        for _ in 0..50 {
            let t = principal_inv_root(v, self.params.k - 1);
            let f = v + self.correction(v, &vals) - omega;
            // d/dv Σ φ_j v^{1-j/(k-1)}
            let mut d = C64::new(1.0, 0.0);
            let mut tj = C64::new(1.0, 0.0);
            for (j, p) in vals.phi.iter().enumerate() {
                d += p * (1.0 - j as f64 / (k - 1.0)) * tj;
                tj *= t;
            }
            let step = f / d;
            v -= step;
            if !v.is_finite() {
                return Err(fail());
            }
            if step.norm() <= 1e-15 * v.norm() {
                break;
            }
        }
        let eval = |v: C64| -> Result<C64> {
            if !in_region_uv(u, v, &self.params) {
                return Err(fail());
            }
            Ok(self.omega(u, v)?.value - omega)
        };
        let mut v0 = v;
        let mut f0 = eval(v0)?;
        let mut v1 = v0 - f0;
        for _ in 0..MAX_SECANT {
            if f0.norm() <= 1e-14 * omega.norm().max(1.0) {
                return Ok(v0);
            }
            let f1 = eval(v1)?;
            let denom = f1 - f0;
            if denom.norm() == 0.0 {
                return Ok(v1);
            }
            let v2 = v1 - f1 * (v1 - v0) / denom;
            v0 = v1;
            f0 = f1;
            v1 = v2;
        }
        Err(fail())
    }

    /// The conjugacy coordinate `τ(u, ω)`.
    pub fn tau(&self, u: C64, omega: C64) -> Result<LimitReport> {
        let v = self.v_from_omega(u, omega)?;
        self.tau_uv(u, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::{default_params, sample_region_spans};
    use crate::germ::parse_germ;
    use crate::normal_form::normalize;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ctx(n_max: u64) -> FatouContext {
        let g = normalize(&parse_germ("1 1 1 1 0\n2 0 2 1 0\n2 2 0 1 0\n").unwrap()).unwrap();
        let (s, _) = default_params(&g).unwrap();
        FatouContext::new(&g, s, OrbitPolicy::with_n_max(n_max)).unwrap()
    }

    #[test]
    fn compensated_sum_keeps_small_increments() {
        let mut a = Compensated::new(c(1e8, 0.0));
        for _ in 0..1000 {
            a.add(c(1e-9, 0.0));
        }
        assert!((a.minus(1e8) - c(1e-6, 0.0)).norm() < 1e-18);
    }

    #[test]
    fn w_tends_to_v() {
        let ctx = ctx(1 << 12);
        let u = c(200.0, 0.0);
        let vals = ctx.correctors.evaluate(u).unwrap();
        // at fixed u only the φ₁/v term dies out: w/v → 1 + φ₀(u)
        let mut prev = f64::INFINITY;
        for v in [1e6, 1e8, 1e10] {
            let gap = (ctx.w_of(u, c(v, 0.0)).unwrap() / v - 1.0 - vals.phi[0]).norm();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-6);
        let w = ctx.w_of(u, c(1e6, 0.0)).unwrap();
        assert!((w - (1e6 * (1.0 + vals.phi[0]) + vals.phi[1])).norm() < 1e-8);
    }

    #[test]
    fn out_of_region_is_rejected() {
        let ctx = ctx(1 << 12);
        assert!(matches!(ctx.w_of(c(1.0, 0.0), c(1e6, 0.0)), Err(Error::OutOfRegion { .. })));
        assert!(matches!(ctx.omega(c(200.0, 0.0), c(10.0, 0.0)), Err(Error::OutOfRegion { .. })));
    }

    #[test]
    fn abel_equation_at_a_few_points() {
        let ctx = ctx(1 << 16);
        for (u, v) in sample_region_spans(&ctx.params, 4, 4.0, 10.0) {
            let a = ctx.omega(u, v).unwrap();
            let (u1, v1) = ctx.map.step(u, v).unwrap();
            let b = ctx.omega(u1, v1).unwrap();
            assert!((b.value - a.value - 1.0).norm() < 1e-8, "{}", (b.value - a.value - 1.0).norm());
        }
    }

    #[test]
    fn v_is_recovered_from_omega() {
        let ctx = ctx(1 << 10);
        let (u, v) = (c(100.0, 3.0), c(5e4, 100.0));
        let om = ctx.omega(u, v).unwrap().value;
        let back = ctx.v_from_omega(u, om).unwrap();
        assert!((back - v).norm() < 1e-8 * v.norm(), "{back} {v}");
    }
}
