//! Acceptance run: one PASS/FAIL line per criterion, then an assertion that
//! the failing set matches `KNOWN_FAILURES`.
//!
//! Every tolerance, sample count and time budget is pinned below.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use parabolic::cli::verify::one_step_defects;
use parabolic::coords::{
    certify_region, default_params, in_region_tw, psi0_inverse, sample_region_spans, sample_region_tw, SectorParams,
};
use parabolic::expansion::{build_expansion, numeric_fit_gj};
use parabolic::fatou::checks::random_point;
use parabolic::fatou::{
    check_injectivity, check_orbit_bounds, extend_along_orbit, FatouContext, Orbit, OrbitPolicy, Verdict, Which,
};
use parabolic::germ::{check_theoremA_hypothesis, parse_germ, GermMap, ProjPoint};
use parabolic::normal_form::{conjugate_linear, normalize, NormalGerm};
use parabolic::render::{scan, write_ppm, SliceSpec};
use parabolic::series::Precision;

const ONE_ONE_ONE: &str = "1 1 1 1 0\n2 0 2 1 0\n2 2 0 1 0\n";
const CUBIC: &str = "1 1 2 1 0\n2 0 3 1 0\n2 3 0 1 0\n";
const QUAD_PQ: &str = "1 1 1 1 0\n2 0 2 1 0\n2 2 0 1 0\n1 3 0 0.5 0\n2 1 2 -1 0.5\n";
const CUBIC_PQ: &str = "1 1 2 1 0\n2 0 3 1 0\n2 3 0 1 0\n1 4 0 0.5 0\n2 2 2 0.25 -0.5\n";

const SEED: u64 = 20_240_601;

// 1
const STRUCTURE_TOL: f64 = 1e-12;
const BUDGET_1: Duration = Duration::from_secs(1);
// 2
const CONJUGATES: usize = 20;
const ROUND_TRIP_TOL: f64 = 1e-9;
const BUDGET_2: Duration = Duration::from_secs(10);
// 3
const FIT_POINTS: usize = 20;
const FIT_TOL: f64 = 1e-6;
const BUDGET_3: Duration = Duration::from_secs(30);
// 4
const ODE_POINTS: usize = 50;
const ODE_TOL: f64 = 1e-9;
const FD_REL_STEP: f64 = 1e-4;
const FD_TOL: f64 = 1e-5;
const BUDGET_4: Duration = Duration::from_secs(60);
// 5
const REGION_SAMPLES: usize = 10_000;
const BUDGET_5: Duration = Duration::from_secs(30);
// 6
const BOUND_SEEDS: usize = 100;
const BOUND_STEPS: u64 = 10_000;
const BUDGET_6: Duration = Duration::from_secs(60);
// 7, 8
const ABEL_SAMPLES: usize = 100;
const ABEL_TOL: f64 = 1e-8;
const TAU_TOL: f64 = 1e-6;
const BUDGET_7: Duration = Duration::from_secs(300);
// 9
const ENVELOPE_SAMPLES: usize = 200;
const ENVELOPE_FACTOR: f64 = 1.5;
const BUDGET_9: Duration = Duration::from_secs(120);
// 10
const ASYM_SEED: (f64, f64) = (5.0, 60.0);
const ASYM_PARAMS: (f64, f64, f64) = (4.0, 0.25, PI / 8.0);
const ASYM_W_TOL: f64 = 1e-2;
const BUDGET_10: Duration = Duration::from_secs(300);
// 11
const F3_SAMPLES: usize = 10_000;
const BUDGET_11: Duration = Duration::from_secs(10);
// 12
const EXTEND_POINTS: usize = 100;
const EXTEND_ATTEMPTS: usize = 400;
const EXTEND_BUDGET: u64 = 100_000;
const EXTEND_TOL: f64 = 1e-6;
const BUDGET_12: Duration = Duration::from_secs(300);
// 13
const IMAGE_SIZE: usize = 128;
const RENDER_WORKERS: usize = 4;
const RENDER_N_MAX: u64 = 4096;
const BUDGET_13: Duration = Duration::from_secs(120);
// injectivity
const INJECTIVITY_PAIRS: usize = 1000;
const INJECTIVITY_N_MAX: u64 = 1 << 14;
const BUDGET_INJ: Duration = Duration::from_secs(120);

/// Criteria expected to fail on this machine; see the project notes.
const KNOWN_FAILURES: &[&str] = &[];

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn run(id: &'static str, budget: Duration, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (ok, detail) = f();
    let elapsed = t.elapsed();
    let o = Outcome { id, pass: ok && elapsed <= budget, detail, elapsed, budget };
    println!(
        "{} {:<26} {} [{:.1}s of {:.0}s]",
        if o.pass { "PASS" } else { "FAIL" },
        o.id,
        o.detail,
        o.elapsed.as_secs_f64(),
        o.budget.as_secs_f64()
    );
    o
}

fn normal(text: &str) -> NormalGerm {
    normalize(&parse_germ(text).unwrap()).unwrap()
}

fn context(g: &NormalGerm, n_max: u64) -> FatouContext {
    let (s, _) = default_params(g).unwrap();
    FatouContext::new(g, s, OrbitPolicy::with_n_max(n_max)).unwrap()
}

fn sector_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64, theta: f64) -> C {
    C::from_polar(lo * (hi / lo).powf(rng.gen::<f64>()), theta * (2.0 * rng.gen::<f64>() - 1.0))
}

fn low_degree_gap(a: &GermMap, b: &GermMap, deg: u32) -> f64 {
    a.comp1.truncate(deg).max_diff(&b.comp1.truncate(deg)).max(a.comp2.truncate(deg).max_diff(&b.comp2.truncate(deg)))
}

fn c1_structure() -> (bool, String) {
    let rep = check_theoremA_hypothesis(&parse_germ(ONE_ONE_ONE).unwrap());
    let d = &rep.all_directions;
    let ok = rep.pass
        && d.len() == 1
        && d[0].dir.distance(&ProjPoint(C::new(0.0, 0.0), C::new(1.0, 0.0))) < STRUCTURE_TOL
        && (d[0].lambda - 1.0).norm() < STRUCTURE_TOL
        && d[0].director.is_some_and(|z| z.norm() < STRUCTURE_TOL);
    (
        ok,
        format!(
            "directions={} lambda={} director={}",
            d.len(),
            d[0].lambda,
            d[0].director.map_or("none".into(), |z| z.to_string())
        ),
    )
}

fn c2_round_trip() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for (text, k) in [(ONE_ONE_ONE, 2), (CUBIC, 3)] {
        let template = parse_germ(text).unwrap();
        let mut done = 0;
        while done < CONJUGATES {
            let mut e = || C::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let t = nalgebra::Matrix2::new(e(), e(), e(), e());
            if t.determinant().norm() < 0.1 {
                continue;
            }
            let n = normalize(&conjugate_linear(&template, &t).unwrap()).unwrap();
            worst = worst.max(low_degree_gap(&n.base, &template, 2 * k));
            done += 1;
        }
    }
    (worst <= ROUND_TRIP_TOL, format!("conjugates={} max_coeff_gap={worst:e}", 2 * CONJUGATES))
}

fn c3_expansion() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut worst: f64 = 0.0;
    for text in [ONE_ONE_ONE, QUAD_PQ, CUBIC, CUBIC_PQ] {
        let g = normal(text);
        let pack = build_expansion(&g, Precision::Double).unwrap();
        let jmax = g.k as usize - 1;
        for _ in 0..FIT_POINTS {
            let u = sector_point(&mut rng, 150.0, 400.0, PI / 16.0);
            let fit = numeric_fit_gj(&g, u, jmax).unwrap();
            for (j, f) in fit.iter().enumerate() {
                let sym = pack.g(j, u).unwrap();
                worst = worst.max((f - sym).norm() / (1.0 + sym.norm()));
            }
        }
    }
    (worst <= FIT_TOL, format!("germs=4 points={FIT_POINTS} max_rel_gap={worst:e}"))
}

fn c4_correctors() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let (mut ode, mut fd): (f64, f64) = (0.0, 0.0);
    for text in [ONE_ONE_ONE, CUBIC_PQ] {
        let ctx = context(&normal(text), 1 << 10);
        let s = &ctx.correctors;
        for _ in 0..ODE_POINTS {
            let u = sector_point(&mut rng, ctx.params.r, 100.0 * ctx.params.r, ctx.params.theta);
            let v = s.evaluate(u).unwrap();
            let (f, g) = s.forcing(u, &v.phi, &v.dphi);
            let h = FD_REL_STEP * u.norm();
            let (p, m) = (s.evaluate(u + h).unwrap(), s.evaluate(u - h).unwrap());
            for j in 0..s.k as usize {
                ode = ode.max((v.dphi[j] + f[j] * v.phi[j] - g[j]).norm() / (1.0 + g[j].norm()));
                let d = (p.phi[j] - m.phi[j]) / (2.0 * h);
                fd = fd.max((d - v.dphi[j]).norm() / v.dphi[j].norm().max(f64::MIN_POSITIVE));
            }
        }
    }
    (ode <= ODE_TOL && fd <= FD_TOL, format!("max_ode_residual={ode:e} max_fd_rel={fd:e}"))
}

fn c5_region(g: &NormalGerm, s: &SectorParams) -> (bool, String) {
    let cert = certify_region(g, s, REGION_SAMPLES).unwrap();
    (
        cert.invariance_failures == 0,
        format!(
            "R={} delta={} theta={:.4} samples={} violations={}",
            s.r, s.delta, s.theta, cert.samples, cert.invariance_failures
        ),
    )
}

fn c6_bounds(ctx: &FatouContext) -> (bool, String) {
    let seeds = sample_region_spans(&ctx.params, BOUND_SEEDS, 4.0, 10.0);
    let total: u64 = seeds.par_iter().map(|&(u, v)| check_orbit_bounds(ctx, u, v, BOUND_STEPS).unwrap().total()).sum();
    (total == 0, format!("seeds={BOUND_SEEDS} steps={BOUND_STEPS} violations={total}"))
}

fn abel_points(ctx: &FatouContext, n: usize, first_stream: u64) -> Vec<(C, C)> {
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED);
            rng.set_stream(first_stream + i as u64);
            random_point(ctx, &mut rng)
        })
        .collect()
}

/// Criteria 7 and 8 share their orbits.
fn c7_c8(ctx: &FatouContext) -> ((bool, String), (bool, String)) {
    let pts = abel_points(ctx, ABEL_SAMPLES, 0);
    let d: Vec<(f64, f64, bool)> = pts.par_iter().map(|&(u, v)| one_step_defects(ctx, u, v).unwrap()).collect();
    let abel = d.iter().map(|x| x.0).fold(0.0, f64::max);
    let tau = d.iter().map(|x| x.1).fold(0.0, f64::max);
    let low = d.iter().filter(|x| x.2).count();
    (
        (
            abel <= ABEL_TOL,
            format!("samples={ABEL_SAMPLES} max={abel:e} eps_tail={:e} low_confidence={low}", ctx.policy.eps_tail),
        ),
        (tau <= TAU_TOL, format!("samples={ABEL_SAMPLES} max={tau:e}")),
    )
}

fn c9_envelopes(ctx: &FatouContext) -> (bool, String) {
    let k = ctx.params.k as f64;
    let pts = abel_points(ctx, ENVELOPE_SAMPLES, 10_000);
    let ratios: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|&(u, v)| {
            let r = ctx.limits(u, v).unwrap();
            let om = r.omega.value;
            let eta = (om - ctx.w_of(u, v).unwrap()).norm();
            let mu = (r.tau.value - u + om.ln() - ctx.alpha_of(u).unwrap()).norm();
            let env_eta = 12.0 * k * (u.re - 1.0).powf(-1.0 / k)
                + 4.0 * k * u.re.powf((2.0 * k - 1.0) / k) * v.re.powf(-1.0 / (k - 1.0));
            let env_mu = 4.0 * k * u.re.powf((k + 1.0) / k) * om.re.powf(-1.0 / (k - 1.0))
                + 24.0 * k * (u.re - 1.0).powf(-1.0 / k);
            (eta / env_eta, mu / env_mu)
        })
        .collect();
    let (fit, test) = ratios.split_at(ENVELOPE_SAMPLES / 2);
    let c_eta = fit.iter().map(|r| r.0).fold(0.0, f64::max);
    let c_mu = fit.iter().map(|r| r.1).fold(0.0, f64::max);
    let x_eta = test.iter().map(|r| r.0).fold(0.0, f64::max) / c_eta;
    let x_mu = test.iter().map(|r| r.1).fold(0.0, f64::max) / c_mu;
    (
        x_eta <= ENVELOPE_FACTOR && x_mu <= ENVELOPE_FACTOR,
        format!("C_eta={c_eta:.3e} worst_eta/C={x_eta:.3} c_mu={c_mu:.3e} worst_mu/c={x_mu:.3}"),
    )
}

fn c10_asymptotics() -> (bool, String) {
    let g = normal(ONE_ONE_ONE);
    let (r, d, t) = ASYM_PARAMS;
    let s = SectorParams::new(2, r, d, t).unwrap();
    let ctx = FatouContext::new(&g, s, OrbitPolicy::default()).unwrap();
    let mut orbit = Orbit::new(&ctx, C::new(ASYM_SEED.0, 0.0), C::new(ASYM_SEED.1, 0.0)).unwrap();
    let mut dist = Vec::new();
    let mut w_rel = f64::NAN;
    for n in [1_000u64, 10_000, 100_000, 1_000_000] {
        orbit.advance_to(n).unwrap();
        let (u, v) = (orbit.u.value(), orbit.v.value());
        if n == 100_000 {
            w_rel = (ctx.w_of(u, v).unwrap() / n as f64 - 1.0).norm();
        }
        dist.push((u / (n as f64).ln() - 1.0).norm());
    }
    let ratio = 1.0 + dist[3];
    let trend = dist.windows(2).all(|p| p[1] <= p[0]);
    (
        w_rel <= ASYM_W_TOL && dist[3] < 0.5 && trend,
        format!(
            "|w/n-1|@1e5={w_rel:.2e} |u/log n|@1e6~{ratio:.3} dist=[{}]",
            dist.iter().map(|d| format!("{d:.3}")).collect::<Vec<_>>().join(",")
        ),
    )
}

fn c11_f3(s: &SectorParams) -> (bool, String) {
    let bad = sample_region_tw(s, F3_SAMPLES).into_iter().filter(|&(th, w)| !in_region_tw(th, w + 1.0, s)).count();
    (bad == 0, format!("samples={F3_SAMPLES} violations={bad}"))
}

/// Points just outside `Ω` on the chart branch, in original coordinates.
fn pre_entry_point(ctx: &FatouContext, rng: &mut ChaCha8Rng) -> (C, C) {
    let s = &ctx.params;
    let k = s.k as f64;
    let re_u = s.r * (1.0 + rng.gen::<f64>());
    let u = C::new(re_u, re_u * (0.9 * s.theta * (2.0 * rng.gen::<f64>() - 1.0)).tan());
    let v_min = u.norm().powf(s.uv_exponent()) / s.delta;
    let v =
        C::from_polar(v_min * rng.gen_range(0.2..0.9), 0.9 * (k - 1.0) / k * s.theta * (2.0 * rng.gen::<f64>() - 1.0));
    let (x, y) = psi0_inverse(u, v, s.k).unwrap();
    ctx.germ.conj.to_original(x, y)
}

/// Points of `Ω` itself, in original coordinates.
fn interior_point(ctx: &FatouContext, rng: &mut ChaCha8Rng) -> (C, C) {
    let (u, v) = random_point(ctx, rng);
    let (x, y) = psi0_inverse(u, v, ctx.params.k).unwrap();
    ctx.germ.conj.to_original(x, y)
}

/// Alternates points entering from outside, where both orbits reach `Ω` at
/// the same point, with points of `Ω`, where the two limits come from
/// different orbits.
fn c12_extension(ctx: &FatouContext) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 12);
    let (mut used, mut tried) = (0, 0);
    let mut worst = [(0.0f64, 0.0f64); 2];
    while used < EXTEND_POINTS && tried < EXTEND_ATTEMPTS {
        let batch: Vec<(usize, (C, C))> = (used..EXTEND_POINTS)
            .map(|i| {
                let kind = i % 2;
                (kind, if kind == 0 { pre_entry_point(ctx, &mut rng) } else { interior_point(ctx, &mut rng) })
            })
            .collect();
        tried += batch.len();
        let res: Vec<Option<(usize, f64, f64)>> = batch
            .par_iter()
            .map(|&(kind, (x, y))| {
                let a = extend_along_orbit(ctx, x, y, EXTEND_BUDGET).ok()?;
                let (fx, fy) = ctx.step_original(x, y);
                let b = extend_along_orbit(ctx, fx, fy, EXTEND_BUDGET).ok()?;
                match (a, b) {
                    (Verdict::Attracted { omega: oa, tau: ta, .. }, Verdict::Attracted { omega: ob, tau: tb, .. }) => {
                        Some((kind, (ob - oa - 1.0).norm(), (tb - ta).norm()))
                    }
                    _ => None,
                }
            })
            .collect();
        for (kind, dw, dt) in res.into_iter().flatten() {
            used += 1;
            worst[kind].0 = worst[kind].0.max(dw);
            worst[kind].1 = worst[kind].1.max(dt);
        }
    }
    let ok = used >= EXTEND_POINTS && worst.iter().all(|w| w.0 <= EXTEND_TOL && w.1 <= EXTEND_TOL);
    (
        ok,
        format!(
            "entered={used}/{tried} outside: omega={:.1e} tau={:.1e}; inside: omega={:.1e} tau={:.1e}",
            worst[0].0, worst[0].1, worst[1].0, worst[1].1
        ),
    )
}

fn c13_render(g: &NormalGerm) -> (bool, String) {
    let ctx = context(g, RENDER_N_MAX);
    let spec = SliceSpec {
        base: (C::new(0.0, 0.0), C::new(0.0, 0.0)),
        dir_s: (C::new(0.0, 1.0), C::new(0.0, 0.0)),
        dir_t: (C::new(0.0, 0.0), C::new(1.0, 0.0)),
        s_range: (-0.05, 0.05),
        t_range: (-0.1, 0.0),
        width: IMAGE_SIZE,
        height: IMAGE_SIZE,
        n_entry: 10_000,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(RENDER_WORKERS).build().unwrap();
    let render = || {
        let grid = pool.install(|| scan(&ctx, &spec)).unwrap();
        let mut bytes = Vec::new();
        write_ppm(&grid, &mut bytes).unwrap();
        (grid.attracted(), bytes)
    };
    let (n1, a) = render();
    let (_, b) = render();
    (a == b && n1 >= 1, format!("{IMAGE_SIZE}x{IMAGE_SIZE} identical={} attracted={n1}", a == b))
}

fn injectivity(g: &NormalGerm) -> (bool, String) {
    let ctx = context(g, INJECTIVITY_N_MAX);
    let a = check_injectivity(&ctx, Which::Psi1, INJECTIVITY_PAIRS, SEED).unwrap();
    let b = check_injectivity(&ctx, Which::Psi2, INJECTIVITY_PAIRS, SEED).unwrap();
    (
        a.violations == 0 && b.violations == 0,
        format!(
            "psi1 pairs={} violations={} min_sep={:.2e}; psi2 pairs={} violations={} unrecovered={} min_sep={:.2e}",
            a.pairs, a.violations, a.min_separation, b.pairs, b.violations, b.recovery_failures, b.min_separation
        ),
    )
}

fn main() {
    let g = normal(ONE_ONE_ONE);
    let ctx = context(&g, OrbitPolicy::default().n_max);
    let s = ctx.params;
    let mut out = vec![
        run("1 hypothesis structure", BUDGET_1, c1_structure),
        run("2 normal form round trip", BUDGET_2, c2_round_trip),
        run("3 expansion cross-check", BUDGET_3, c3_expansion),
        run("4 corrector ODE", BUDGET_4, c4_correctors),
        run("5 region invariance", BUDGET_5, || c5_region(&g, &s)),
        run("6 orbit bounds", BUDGET_6, || c6_bounds(&ctx)),
    ];
    // 8 reuses the orbits of 7, whose time covers both
    let mut tau = None;
    out.push(run("7 abel equation", BUDGET_7, || {
        let (a, t) = c7_c8(&ctx);
        tau = Some(t);
        a
    }));
    out.push(run("8 tau invariance", BUDGET_7, || tau.take().unwrap()));
    out.push(run("9 eta and mu envelopes", BUDGET_9, || c9_envelopes(&ctx)));
    out.push(run("10 asymptotics", BUDGET_10, c10_asymptotics));
    out.push(run("11 f3 invariance", BUDGET_11, || c11_f3(&s)));
    out.push(run("12 orbit extension", BUDGET_12, || c12_extension(&ctx)));
    out.push(run("13 render determinism", BUDGET_13, || c13_render(&g)));
    out.push(run("injectivity", BUDGET_INJ, || injectivity(&g)));

    let failed: Vec<&str> = out.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!("{} of {} criteria pass", out.len() - failed.len(), out.len());
    assert_eq!(failed, KNOWN_FAILURES, "failing criteria differ from the known set");
}
