//! The invariant suite behind `verify`, reported as a flat certificate.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coords::{certify_region, in_region_tw, sample_region_spans, sample_region_tw, CERTIFY_SAMPLES};
use crate::error::Result;
use crate::fatou::checks::random_point;
use crate::fatou::{check_orbit_bounds, FatouContext};

pub const ABEL_TOL: f64 = 1e-8;
pub const TAU_TOL: f64 = 1e-6;
pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_BOUNDS_ORBITS: usize = 100;
pub const DEFAULT_BOUNDS_STEPS: u64 = 10_000;
pub const DEFAULT_F3_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug)]
pub struct VerifySizes {
    pub samples: usize,
    pub bounds_orbits: usize,
    pub bounds_steps: u64,
    pub f3_samples: usize,
    pub seed: u64,
}

/// Ordered `key = value` lines plus the overall verdict.
#[derive(Clone, Debug, Default)]
pub struct Certificate {
    pub lines: Vec<(String, String)>,
    pub pass: bool,
}

impl Certificate {
    fn put(&mut self, k: &str, v: impl ToString) {
        self.lines.push((k.to_string(), v.to_string()));
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn pass_str(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}

/// Abel and τ defects at `(u, v)`: `|ω(f₁ p) - ω(p) - 1|`, `|τ(f₁ p) - τ(p)|`
/// and whether either limit stayed low-confidence.
pub fn one_step_defects(ctx: &FatouContext, u: Complex64, v: Complex64) -> Result<(f64, f64, bool)> {
    let a = ctx.limits(u, v)?;
    let (u1, v1) = ctx.map.step(u, v)?;
    let b = ctx.limits(u1, v1)?;
    let low = a.omega.low_confidence() || b.omega.low_confidence();
    Ok(((b.omega.value - a.omega.value - 1.0).norm(), (b.tau.value - a.tau.value).norm(), low))
}

/// Runs region, orbit-bound, Abel, τ and f₃ checks. Dynamic checks are
/// skipped when the region itself fails.
pub fn run_suite(ctx: &FatouContext, sizes: &VerifySizes) -> Result<Certificate> {
    let s = ctx.params;
    let mut cert = Certificate::default();
    cert.put("k", s.k);
    cert.put("R", s.r);
    cert.put("delta", s.delta);
    cert.put("theta", s.theta);
    cert.put("n_max", ctx.policy.n_max);
    cert.put("eps_tail", format!("{:e}", ctx.policy.eps_tail));

    let region = certify_region(&ctx.germ, &s, CERTIFY_SAMPLES)?;
    cert.put("region_samples", region.samples);
    cert.put("region_invariance_failures", region.invariance_failures);
    cert.put("region_remainder_failures", region.remainder_failures);
    cert.put("region_worst_v_remainder", format!("{:e}", region.worst_v_remainder));
    cert.put("region_worst_u_remainder", format!("{:e}", region.worst_u_remainder));
    cert.put("region", pass_str(region.passed()));
    if !region.passed() {
        for key in ["bounds", "abel", "tau", "f3"] {
            cert.put(key, "skipped");
        }
        cert.put("all", "fail");
        cert.pass = false;
        return Ok(cert);
    }

    let seeds = sample_region_spans(&s, sizes.bounds_orbits, 4.0, 10.0);
    let bounds: Vec<u64> = seeds
        .par_iter()
        .map(|&(u, v)| Ok(check_orbit_bounds(ctx, u, v, sizes.bounds_steps)?.total()))
        .collect::<Result<_>>()?;
    let bounds_violations: u64 = bounds.iter().sum();
    cert.put("bounds_orbits", sizes.bounds_orbits);
    cert.put("bounds_steps", sizes.bounds_steps);
    cert.put("bounds_violations", bounds_violations);
    cert.put("bounds", pass_str(bounds_violations == 0));

    let points: Vec<(Complex64, Complex64)> = (0..sizes.samples)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(sizes.seed);
            rng.set_stream(i as u64);
            random_point(ctx, &mut rng)
        })
        .collect();
    let defects: Vec<(f64, f64, bool)> =
        points.par_iter().map(|&(u, v)| one_step_defects(ctx, u, v)).collect::<Result<_>>()?;
    let abel = defects.iter().map(|d| d.0).fold(0.0, f64::max);
    let tau = defects.iter().map(|d| d.1).fold(0.0, f64::max);
    let low = defects.iter().filter(|d| d.2).count();
    cert.put("abel_samples", sizes.samples);
    cert.put("abel_max_residual", format!("{abel:e}"));
    cert.put("abel_low_confidence", low);
    cert.put("abel", pass_str(abel <= ABEL_TOL));
    cert.put("tau_max_residual", format!("{tau:e}"));
    cert.put("tau", pass_str(tau <= TAU_TOL));

    let f3_violations =
        sample_region_tw(&s, sizes.f3_samples).into_iter().filter(|&(th, w)| !in_region_tw(th, w + 1.0, &s)).count();
    cert.put("f3_samples", sizes.f3_samples);
    cert.put("f3_violations", f3_violations);
    cert.put("f3", pass_str(f3_violations == 0));

    cert.pass = bounds_violations == 0 && abel <= ABEL_TOL && tau <= TAU_TOL && f3_violations == 0;
    cert.put("all", pass_str(cert.pass));
    Ok(cert)
}
