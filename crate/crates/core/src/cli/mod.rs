//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O, parse or configuration error, 2 the germ
//! fails the hypothesis, 3 a verification or numerical failure.

pub mod config;
pub mod verify;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;

pub use config::{parse_config, Config};

use crate::coords::{default_params, initial_params, SectorParams};
use crate::error::{Error, Result};
use crate::fatou::{find_entry, write_orbit_csv, Entry, FatouContext, FatouReport, OrbitPolicy};
use crate::germ::{check_theoremA_hypothesis, parse_germ, GermMap, HypothesisReport, ProjPoint};
use crate::normal_form::{normalize, NormalGerm};
use crate::render::{emit_csv, emit_ppm, scan, SliceSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Default orbit budget for orbit extension.
pub const DEFAULT_N_ENTRY: u64 = 10_000;
/// Default limit budget per pixel; the full policy is kept for point queries.
pub const RENDER_N_MAX: u64 = 4096;
pub const DEFAULT_ORBIT_STEPS: u64 = 1000;
pub const DEFAULT_IMAGE_SIZE: usize = 128;

#[derive(Debug, Parser)]
#[command(name = "parabolic", version, about = "Fatou coordinates for germs of C^2 tangent to the identity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Germ file (overrides `germ` in the config).
    #[arg(long, global = true)]
    pub germ: Option<PathBuf>,
    /// Output path (overrides `out` in the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Order, characteristic directions, directors and the hypothesis check.
    Analyze,
    /// The linearly conjugate normal form.
    Normalize,
    /// Orbit CSV from the chart point `u`, `v`.
    Orbit,
    /// ω and τ with tail diagnostics at a point.
    Fatou,
    /// The invariant suite as a key = value certificate.
    Verify,
    /// Basin slice as PPM plus CSV.
    Basin,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Parse { .. } | Error::Config(_) | Error::InvalidParams(_) => EXIT_INPUT,
        Error::IdentityGerm(_) | Error::EveryDirectionCharacteristic | Error::NotUniqueDirection(_) => EXIT_HYPOTHESIS,
        _ => EXIT_VERIFY,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Setup {
    cfg: Config,
    germ: GermMap,
}

fn load(cli: &Cli) -> Result<Setup> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(&fs::read_to_string(p)?)?,
        None => Config::default(),
    };
    // config paths are relative to the config file
    if let (Some(cp), Some(g)) = (&cli.config, &cfg.germ) {
        if g.is_relative() {
            cfg.germ = Some(cp.parent().unwrap_or(Path::new(".")).join(g));
        }
    }
    if cli.germ.is_some() {
        cfg.germ = cli.germ.clone();
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if let Some(w) = cfg.workers {
        // a second initialisation in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global();
    }
    let path = cfg.germ.clone().ok_or_else(|| Error::Config("no germ file given".into()))?;
    let germ = parse_germ(&fs::read_to_string(&path)?)?;
    Ok(Setup { cfg, germ })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut o = std::io::stdout().lock();
            o.write_all(text.as_bytes())?;
            o.flush()?;
        }
    }
    Ok(())
}

fn fmt_c(z: Complex64) -> String {
    format!("{:.17e},{:.17e}", z.re, z.im)
}

fn fmt_dir(p: &ProjPoint) -> String {
    let short = |z: Complex64| {
        if z.im == 0.0 {
            format!("{}", z.re)
        } else {
            format!("{}", z)
        }
    };
    format!("[{}:{}]", short(p.0), short(p.1))
}

fn analysis_text(rep: &HypothesisReport) -> String {
    let mut s = String::new();
    if let Some(k) = rep.k {
        let _ = writeln!(s, "k = {k}");
    }
    let _ = writeln!(s, "directions = {}", rep.all_directions.len());
    for d in &rep.all_directions {
        let _ = write!(s, "direction {} lambda = {} multiplicity = {}", fmt_dir(&d.dir), d.lambda, d.multiplicity);
        match d.director {
            Some(dr) => {
                let _ = writeln!(s, " director = {dr}");
            }
            None => {
                let _ = writeln!(s, " degenerate");
            }
        }
    }
    let _ = writeln!(s, "hypothesis = {}", if rep.pass { "pass" } else { "fail" });
    for r in &rep.reasons {
        let _ = writeln!(s, "reason = {r}");
    }
    s
}

fn analysis_csv(rep: &HypothesisReport) -> String {
    let mut s = String::from(
        "dir0_re,dir0_im,dir1_re,dir1_im,lambda_re,lambda_im,degenerate,director_re,director_im,multiplicity\n",
    );
    for d in &rep.all_directions {
        let (dr, di) = d.director.map_or((String::new(), String::new()), |z| (z.re.to_string(), z.im.to_string()));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{dr},{di},{}",
            d.dir.0.re, d.dir.0.im, d.dir.1.re, d.dir.1.im, d.lambda.re, d.lambda.im, d.degenerate, d.multiplicity
        );
    }
    s
}

/// The normal form, or the hypothesis report when the germ fails it.
fn gate(germ: &GermMap) -> std::result::Result<NormalGerm, HypothesisReport> {
    let rep = check_theoremA_hypothesis(germ);
    if !rep.pass {
        return Err(rep);
    }
    normalize(germ).map_err(|e| HypothesisReport { pass: false, reasons: vec![e.to_string()], ..rep })
}

/// Certified defaults with config overrides applied on top; when all three
/// are given the certification search is skipped.
fn resolve_params(cfg: &Config, g: &NormalGerm) -> Result<SectorParams> {
    let base = match (cfg.r, cfg.delta, cfg.theta) {
        (Some(_), Some(_), Some(_)) => initial_params(g.k),
        _ => default_params(g)?.0,
    };
    let s = SectorParams {
        k: g.k,
        r: cfg.r.unwrap_or(base.r),
        delta: cfg.delta.unwrap_or(base.delta),
        theta: cfg.theta.unwrap_or(base.theta),
    };
    s.validate()?;
    Ok(s)
}

fn policy(cfg: &Config, n_max_default: u64) -> OrbitPolicy {
    let d = OrbitPolicy::default();
    OrbitPolicy {
        n_min: cfg.n_min.unwrap_or(d.n_min),
        n_max: cfg.n_max.unwrap_or(n_max_default),
        eps_tail: cfg.eps_tail.unwrap_or(d.eps_tail),
    }
}

fn context(cfg: &Config, g: &NormalGerm, n_max_default: u64) -> Result<FatouContext> {
    let s = resolve_params(cfg, g)?;
    FatouContext::with_precision(g, s, policy(cfg, n_max_default), cfg.precision.unwrap_or_default())
}

fn require<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing key {key}")))
}

fn report_text(s: &mut String, r: &FatouReport, shift: u64) {
    let _ = writeln!(s, "omega = {}", fmt_c(r.omega.value - shift as f64));
    let _ = writeln!(s, "tau = {}", fmt_c(r.tau.value));
    let _ = writeln!(s, "checkpoint_n = {}", r.omega.n);
    let _ = writeln!(s, "omega_tail_gap = {:e}", r.omega.tail_gap);
    let _ = writeln!(s, "omega_converged = {}", r.omega.converged);
    let _ = writeln!(s, "omega_richardson = {}", fmt_c(r.omega.richardson - shift as f64));
    let _ = writeln!(s, "tau_tail_gap = {:e}", r.tau.tail_gap);
    let _ = writeln!(s, "tau_converged = {}", r.tau.converged);
    let _ = writeln!(s, "tau_richardson = {}", fmt_c(r.tau.richardson));
    let _ = writeln!(s, "step_residual = {:e}", r.step_residual);
    let _ = writeln!(s, "tail_envelope = {:e}", r.envelope);
    let _ = writeln!(s, "low_confidence = {}", r.omega.low_confidence() || r.tau.low_confidence());
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let setup = load(cli)?;
    let cfg = &setup.cfg;
    let out = cfg.out.as_deref();
    if cli.command == Command::Analyze {
        let rep = check_theoremA_hypothesis(&setup.germ);
        emit(None, &analysis_text(&rep))?;
        if let Some(p) = out {
            fs::write(p, analysis_csv(&rep))?;
        }
        return Ok(if rep.pass { EXIT_OK } else { EXIT_HYPOTHESIS });
    }
    let g = match gate(&setup.germ) {
        Ok(g) => g,
        Err(rep) => {
            eprint!("{}", analysis_text(&rep));
            return Ok(EXIT_HYPOTHESIS);
        }
    };
    match cli.command {
        Command::Analyze => unreachable!(),
        Command::Normalize => {
            let mut s = format!("# k = {}\n", g.k);
            let t = g.conj.matrix();
            let _ = writeln!(s, "# T = [[{}, {}], [{}, {}]]", t[(0, 0)], t[(0, 1)], t[(1, 0)], t[(1, 1)]);
            for c in &g.choices {
                let _ = writeln!(s, "# {c}");
            }
            s.push_str(&g.base.to_text());
            emit(out, &s)?;
            Ok(EXIT_OK)
        }
        Command::Orbit => {
            let ctx = context(cfg, &g, OrbitPolicy::default().n_max)?;
            let (u, v) = (require(cfg.u, "u")?, require(cfg.v, "v")?);
            let steps = cfg.steps.unwrap_or(DEFAULT_ORBIT_STEPS);
            match out {
                Some(p) => write_orbit_csv(&ctx, u, v, steps, std::io::BufWriter::new(fs::File::create(p)?))?,
                None => write_orbit_csv(&ctx, u, v, steps, std::io::stdout().lock())?,
            }
            Ok(EXIT_OK)
        }
        Command::Fatou => {
            let ctx = context(cfg, &g, OrbitPolicy::default().n_max)?;
            let mut s = String::new();
            let (u, v, shift) = match (cfg.x, cfg.y) {
                (Some(x), Some(y)) => match find_entry(&ctx, x, y, cfg.n_entry.unwrap_or(DEFAULT_N_ENTRY))? {
                    Entry::Entered { n, u, v } => (u, v, n),
                    Entry::NotDetected => {
                        emit(out, "verdict = not_detected\n")?;
                        return Ok(EXIT_OK);
                    }
                    Entry::ChartSingular => {
                        emit(out, "verdict = chart_singular\n")?;
                        return Ok(EXIT_OK);
                    }
                },
                _ => (require(cfg.u, "u")?, require(cfg.v, "v")?, 0),
            };
            let r = ctx.limits(u, v)?;
            let _ = writeln!(s, "verdict = attracted");
            let _ = writeln!(s, "n_entry = {shift}");
            let _ = writeln!(s, "u = {}", fmt_c(u));
            let _ = writeln!(s, "v = {}", fmt_c(v));
            report_text(&mut s, &r, shift);
            emit(out, &s)?;
            Ok(EXIT_OK)
        }
        Command::Verify => {
            let ctx = context(cfg, &g, OrbitPolicy::default().n_max)?;
            let sizes = verify::VerifySizes {
                samples: cfg.samples.unwrap_or(verify::DEFAULT_SAMPLES),
                bounds_orbits: cfg.bounds_orbits.unwrap_or(verify::DEFAULT_BOUNDS_ORBITS),
                bounds_steps: cfg.bounds_steps.unwrap_or(verify::DEFAULT_BOUNDS_STEPS),
                f3_samples: cfg.f3_samples.unwrap_or(verify::DEFAULT_F3_SAMPLES),
                seed: cfg.seed.unwrap_or(0),
            };
            let cert = match verify::run_suite(&ctx, &sizes) {
                Ok(c) => c,
                Err(e) => {
                    let text = format!("error = {e}\nall = fail\n");
                    emit(out, &text)?;
                    return Ok(EXIT_VERIFY);
                }
            };
            emit(out, &cert.to_text())?;
            Ok(if cert.pass { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Basin => {
            let ctx = context(cfg, &g, RENDER_N_MAX)?;
            let spec = SliceSpec {
                base: require(cfg.slice_base, "slice_base")?,
                dir_s: require(cfg.slice_dir_s, "slice_dir_s")?,
                dir_t: require(cfg.slice_dir_t, "slice_dir_t")?,
                s_range: require(cfg.slice_s, "slice_s")?,
                t_range: require(cfg.slice_t, "slice_t")?,
                width: cfg.width.unwrap_or(DEFAULT_IMAGE_SIZE),
                height: cfg.height.unwrap_or(DEFAULT_IMAGE_SIZE),
                n_entry: cfg.n_entry.unwrap_or(DEFAULT_N_ENTRY),
            };
            let grid = scan(&ctx, &spec)?;
            let ppm = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("basin.ppm"));
            emit_ppm(&grid, &ppm)?;
            emit_csv(&grid, &ppm.with_extension("csv"))?;
            println!("pixels = {}", grid.cells.len());
            println!("attracted = {}", grid.attracted());
            println!("failures = {}", grid.failures);
            Ok(EXIT_OK)
        }
    }
}
