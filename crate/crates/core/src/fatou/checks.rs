//! Sampled checks: injectivity of `ψ₁`, `ψ₂`, orbit bounds, orbit dumps.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{FatouContext, Orbit, Tracker};
use crate::coords::in_region_uv;
use crate::error::{Error, Result};

/// Minimum separation of coordinate values on distinct points.
pub const SEPARATION_TOL: f64 = 1e-8;
/// Relative distance below which a pair is not tested.
pub const PAIR_MIN_REL: f64 = 1e-3;
/// Largest relative displacement inside a pair.
pub const PAIR_MAX_REL: f64 = 0.5;
/// Spans of the sampling box: `Re u ∈ [R, 4R)`, `|v| ∈ [v_min, 10 v_min)`.
pub const SAMPLE_U_SPAN: f64 = 4.0;
pub const SAMPLE_V_SPAN: f64 = 10.0;
/// Fresh draws allowed per pair when `v` cannot be recovered (ψ₂).
pub const RECOVERY_RETRIES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    /// `(u, v) ↦ (u, ω)`; pairs share `u`.
    Psi1,
    /// `(u, ω) ↦ (τ, ω)`; pairs share `ω`.
    Psi2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InjectivityReport {
    pub which: Which,
    pub pairs: usize,
    pub violations: usize,
    pub min_separation: f64,
    /// Draws for which `v` could not be recovered from `ω` (ψ₂ only);
    /// each is replaced by a fresh draw.
    pub recovery_failures: usize,
    /// Largest doubling gap seen; grows when the correctors are wrong.
    pub max_tail_gap: f64,
}

/// A uniformly random point of the sampling box of the region.
pub fn random_point(ctx: &FatouContext, rng: &mut ChaCha8Rng) -> (Complex64, Complex64) {
    let s = &ctx.params;
    let k = s.k as f64;
    let re_u = s.r * SAMPLE_U_SPAN.powf(rng.gen::<f64>());
    let arg_u = s.theta * (2.0 * rng.gen::<f64>() - 1.0) * 0.999;
    let u = Complex64::new(re_u, re_u * arg_u.tan());
    let v_min = u.norm().powf(s.uv_exponent()) / s.delta;
    let mod_v = v_min * SAMPLE_V_SPAN.powf(rng.gen::<f64>()) * (1.0 + 1e-9);
    let arg_v = (k - 1.0) / k * s.theta * (2.0 * rng.gen::<f64>() - 1.0) * 0.999;
    (u, Complex64::from_polar(mod_v, arg_v))
}

fn displaced(z: Complex64, rng: &mut ChaCha8Rng) -> Complex64 {
    let rho = PAIR_MIN_REL * (PAIR_MAX_REL / PAIR_MIN_REL).powf(rng.gen::<f64>());
    let beta = std::f64::consts::TAU * rng.gen::<f64>();
    z * (1.0 + Complex64::from_polar(rho, beta))
}

/// Outcome of one pair: separation (`None` when every draw failed to
/// recover `v`), the largest tail gap, and the number of failed recoveries.
fn pair_separation(ctx: &FatouContext, which: Which, rng: &mut ChaCha8Rng) -> Result<(Option<f64>, f64, usize)> {
    let mut failures = 0;
    let mut gap: f64 = 0.0;
    loop {
        let (u, v) = random_point(ctx, rng);
        match which {
            Which::Psi1 => {
                let v2 = displaced(v, rng);
                if !in_region_uv(u, v2, &ctx.params) {
                    continue;
                }
                let (a, b) = (ctx.omega(u, v)?, ctx.omega(u, v2)?);
                return Ok((Some((a.value - b.value).norm()), a.tail_gap.max(b.tail_gap), 0));
            }
            Which::Psi2 => {
                let u2 = displaced(u, rng);
                let a = ctx.limits(u, v)?;
                gap = gap.max(a.tau.tail_gap);
                let v2 = match ctx.v_from_omega(u2, a.omega.value) {
                    Ok(v2) => v2,
                    Err(Error::InverseRecovery(_)) | Err(Error::OutOfRegion { .. }) => {
                        failures += 1;
                        if failures > RECOVERY_RETRIES {
                            return Ok((None, gap, failures));
                        }
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let b = ctx.limits(u2, v2)?;
                return Ok((Some((a.tau.value - b.tau.value).norm()), gap.max(b.tau.tail_gap), failures));
            }
        }
    }
}

/// Draws `samples` pairs on common fibres and checks that the coordinate
/// separates them. Both members of a pair lie in the region and differ by
/// at least `PAIR_MIN_REL` relatively. Pair `i` uses stream `i` of the
/// seeded generator, so the report does not depend on scheduling.
pub fn check_injectivity(ctx: &FatouContext, which: Which, samples: usize, seed: u64) -> Result<InjectivityReport> {
    let outcomes: Vec<(Option<f64>, f64, usize)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            pair_separation(ctx, which, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut rep = InjectivityReport {
        which,
        pairs: 0,
        violations: 0,
        min_separation: f64::INFINITY,
        recovery_failures: 0,
        max_tail_gap: 0.0,
    };
    for (sep, gap, failures) in outcomes {
        rep.max_tail_gap = rep.max_tail_gap.max(gap);
        rep.recovery_failures += failures;
        match sep {
            None => {}
            Some(sep) => {
                rep.pairs += 1;
                rep.min_separation = rep.min_separation.min(sep);
                if sep < SEPARATION_TOL {
                    rep.violations += 1;
                }
            }
        }
    }
    Ok(rep)
}

/// Violations of `Re v + n/2 ≤ Re v_n ≤ Re v + 3n/2` and
/// `Re u + log(1 + n/Re v)/6 ≤ Re u_n ≤ Re u + 3 log(1 + n/Re v)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundsReport {
    pub steps: u64,
    /// Counts for (v lower, v upper, u lower, u upper).
    pub violations: [u64; 4],
    /// Smallest slack over all four inequalities, relative to their width.
    pub min_slack: f64,
}

impl BoundsReport {
    pub fn total(&self) -> u64 {
        self.violations.iter().sum()
    }
}

pub fn check_orbit_bounds(ctx: &FatouContext, u: Complex64, v: Complex64, steps: u64) -> Result<BoundsReport> {
    let mut orbit = Orbit::new(ctx, u, v)?;
    let mut rep = BoundsReport { steps, violations: [0; 4], min_slack: f64::INFINITY };
    while orbit.n < steps {
        orbit.step()?;
        let n = orbit.n as f64;
        let (un, vn) = (orbit.u.value(), orbit.v.value());
        let lg = (1.0 + n / v.re).ln();
        let checks = [
            (vn.re - v.re - n / 2.0, n),
            (v.re + 1.5 * n - vn.re, n),
            (un.re - u.re - lg / 6.0, lg),
            (u.re + 3.0 * lg - un.re, lg),
        ];
        for (i, (slack, width)) in checks.iter().enumerate() {
            if *slack < 0.0 {
                rep.violations[i] += 1;
            }
            rep.min_slack = rep.min_slack.min(slack / width);
        }
    }
    Ok(rep)
}

/// Writes `n, re_u, im_u, re_v, im_v, re_w, im_w, step_residual` for
/// `n = 0..=steps`, where `step_residual = |w_{n+1} - w_n - 1|`.
pub fn write_orbit_csv<W: Write>(ctx: &FatouContext, u: Complex64, v: Complex64, steps: u64, mut out: W) -> Result<()> {
    writeln!(out, "n,re_u,im_u,re_v,im_v,re_w,im_w,step_residual")?;
    let mut orbit = Orbit::new(ctx, u, v)?;
    let mut tracker = Tracker::new(&ctx.correctors, u)?;
    let mut row = (orbit.u.value(), orbit.v.value(), orbit.w_minus_n(&tracker.vals));
    for n in 0..=steps {
        orbit.step()?;
        let next_w = orbit.w_minus_n(tracker.move_to(orbit.u.hi)?);
        let (un, vn, wn) = row;
        let w = wn + n as f64;
        writeln!(
            out,
            "{n},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            un.re,
            un.im,
            vn.re,
            vn.im,
            w.re,
            w.im,
            (next_w - wn).norm()
        )?;
        row = (orbit.u.value(), orbit.v.value(), next_w);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::default_params;
    use crate::fatou::OrbitPolicy;
    use crate::germ::parse_germ;
    use crate::normal_form::normalize;

    fn ctx() -> FatouContext {
        let g = normalize(&parse_germ("1 1 1 1 0\n2 0 2 1 0\n2 2 0 1 0\n").unwrap()).unwrap();
        let (s, _) = default_params(&g).unwrap();
        FatouContext::new(&g, s, OrbitPolicy::with_n_max(1 << 10)).unwrap()
    }

    #[test]
    fn orbit_csv_starts_at_the_input() {
        let ctx = ctx();
        let (u, v) = (Complex64::new(100.0, 2.0), Complex64::new(1e5, 10.0));
        let mut buf = Vec::new();
        write_orbit_csv(&ctx, u, v, 3, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        let first: Vec<f64> = lines[1].split(',').skip(1).take(4).map(|x| x.parse().unwrap()).collect();
        assert_eq!(first, vec![u.re, u.im, v.re, v.im]);
        let resid: f64 = lines[1].split(',').last().unwrap().parse().unwrap();
        assert!(resid < 1e-6);
    }

    #[test]
    fn bounds_hold_on_a_short_orbit() {
        let ctx = ctx();
        let rep = check_orbit_bounds(&ctx, Complex64::new(50.0, 3.0), Complex64::new(8000.0, 100.0), 1000).unwrap();
        assert_eq!(rep.total(), 0);
        assert!(rep.min_slack > 0.0);
    }

    #[test]
    fn injectivity_on_a_few_pairs() {
        let ctx = ctx();
        let a = check_injectivity(&ctx, Which::Psi1, 5, 7).unwrap();
        assert_eq!((a.pairs, a.violations), (5, 0));
        let b = check_injectivity(&ctx, Which::Psi2, 3, 7).unwrap();
        assert_eq!(b.pairs, 3);
        assert_eq!(b.violations, 0);
        assert!(b.min_separation > 1e-4);
    }

    #[test]
    fn zeroed_corrector_shows_in_the_tail() {
        // negative control: dropping φ₀ leaves w - n drifting like log n
        let ctx = ctx();
        let broken = ctx.with_correctors(ctx.correctors.with_zeroed(0));
        let good = check_injectivity(&ctx, Which::Psi1, 4, 3).unwrap();
        let bad = check_injectivity(&broken, Which::Psi1, 4, 3).unwrap();
        assert!(bad.max_tail_gap > 100.0 * good.max_tail_gap, "{} vs {}", bad.max_tail_gap, good.max_tail_gap);
    }
}
