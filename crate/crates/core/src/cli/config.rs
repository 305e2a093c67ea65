//! Flat `key = value` configuration.
//!
//! One setting per line, `#` starts a comment. Complex numbers are written
//! `re,im` (or just `re`); pairs of complex numbers as `re,im,re,im`.
//!
//! | key | meaning |
//! |-----|---------|
//! | `germ` | germ file |
//! | `R`, `delta`, `theta` | sector overrides |
//! | `n_min`, `n_max`, `eps_tail` | orbit policy of the limits |
//! | `n_entry` | orbit budget for orbit extension |
//! | `precision` | `double` or `extended` series arithmetic |
//! | `workers`, `seed` | thread count, sampling seed |
//! | `samples`, `bounds_orbits`, `bounds_steps`, `f3_samples` | sample counts of `verify` |
//! | `steps` | length of an `orbit` dump |
//! | `u`, `v` | chart point for `orbit` and `fatou` |
//! | `x`, `y` | point of ℂ² for `fatou` (original coordinates) |
//! | `slice_base`, `slice_dir_s`, `slice_dir_t` | basin slice plane |
//! | `slice_s`, `slice_t` | real parameter ranges `lo,hi` |
//! | `width`, `height` | image size |
//! | `out` | output path |

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::Precision;

const KEYS: &[&str] = &[
    "germ",
    "R",
    "delta",
    "theta",
    "n_min",
    "n_max",
    "eps_tail",
    "n_entry",
    "precision",
    "workers",
    "seed",
    "samples",
    "bounds_orbits",
    "bounds_steps",
    "f3_samples",
    "steps",
    "u",
    "v",
    "x",
    "y",
    "slice_base",
    "slice_dir_s",
    "slice_dir_t",
    "slice_s",
    "slice_t",
    "width",
    "height",
    "out",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    pub germ: Option<PathBuf>,
    pub r: Option<f64>,
    pub delta: Option<f64>,
    pub theta: Option<f64>,
    pub n_min: Option<u64>,
    pub n_max: Option<u64>,
    pub eps_tail: Option<f64>,
    pub n_entry: Option<u64>,
    pub precision: Option<Precision>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub bounds_orbits: Option<usize>,
    pub bounds_steps: Option<u64>,
    pub f3_samples: Option<usize>,
    pub steps: Option<u64>,
    pub u: Option<Complex64>,
    pub v: Option<Complex64>,
    pub x: Option<Complex64>,
    pub y: Option<Complex64>,
    pub slice_base: Option<(Complex64, Complex64)>,
    pub slice_dir_s: Option<(Complex64, Complex64)>,
    pub slice_dir_t: Option<(Complex64, Complex64)>,
    pub slice_s: Option<(f64, f64)>,
    pub slice_t: Option<(f64, f64)>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub out: Option<PathBuf>,
}

fn numbers(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|p| p.trim().parse::<f64>().ok()).collect()
}

fn complex(s: &str) -> Option<Complex64> {
    match numbers(s)?.as_slice() {
        [re] => Some(Complex64::new(*re, 0.0)),
        [re, im] => Some(Complex64::new(*re, *im)),
        _ => None,
    }
}

fn complex_pair(s: &str) -> Option<(Complex64, Complex64)> {
    match numbers(s)?.as_slice() {
        [a, b, c, d] => Some((Complex64::new(*a, *b), Complex64::new(*c, *d))),
        _ => None,
    }
}

fn range(s: &str) -> Option<(f64, f64)> {
    match numbers(s)?.as_slice() {
        [lo, hi] => Some((*lo, *hi)),
        _ => None,
    }
}

pub fn parse_config(text: &str) -> Result<Config> {
    let mut raw = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Config(format!("line {}: unknown key {k:?}", n + 1)));
        }
        if raw.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: key {k:?} given twice", n + 1)));
        }
    }
    let get = |k: &str| raw.get(k).map(String::as_str);
    fn conv<T>(key: &str, v: Option<&str>, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        v.map(|s| f(s).ok_or_else(|| Error::Config(format!("bad value {s:?} for {key}")))).transpose()
    }
    let float = |s: &str| s.parse::<f64>().ok();
    let uint = |s: &str| s.parse::<u64>().ok();
    let usize_ = |s: &str| s.parse::<usize>().ok();
    let precision = |s: &str| match s {
        "double" => Some(Precision::Double),
        "extended" => Some(Precision::Extended),
        _ => None,
    };
    Ok(Config {
        germ: get("germ").map(PathBuf::from),
        r: conv("R", get("R"), float)?,
        delta: conv("delta", get("delta"), float)?,
        theta: conv("theta", get("theta"), float)?,
        n_min: conv("n_min", get("n_min"), uint)?,
        n_max: conv("n_max", get("n_max"), uint)?,
        eps_tail: conv("eps_tail", get("eps_tail"), float)?,
        n_entry: conv("n_entry", get("n_entry"), uint)?,
        precision: conv("precision", get("precision"), precision)?,
        workers: conv("workers", get("workers"), usize_)?,
        seed: conv("seed", get("seed"), uint)?,
        samples: conv("samples", get("samples"), usize_)?,
        bounds_orbits: conv("bounds_orbits", get("bounds_orbits"), usize_)?,
        bounds_steps: conv("bounds_steps", get("bounds_steps"), uint)?,
        f3_samples: conv("f3_samples", get("f3_samples"), usize_)?,
        steps: conv("steps", get("steps"), uint)?,
        u: conv("u", get("u"), complex)?,
        v: conv("v", get("v"), complex)?,
        x: conv("x", get("x"), complex)?,
        y: conv("y", get("y"), complex)?,
        slice_base: conv("slice_base", get("slice_base"), complex_pair)?,
        slice_dir_s: conv("slice_dir_s", get("slice_dir_s"), complex_pair)?,
        slice_dir_t: conv("slice_dir_t", get("slice_dir_t"), complex_pair)?,
        slice_s: conv("slice_s", get("slice_s"), range)?,
        slice_t: conv("slice_t", get("slice_t"), range)?,
        width: conv("width", get("width"), usize_)?,
        height: conv("height", get("height"), usize_)?,
        out: get("out").map(PathBuf::from),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind_of_value() {
        let c = parse_config(
            "# sample\ngerm = a.germ\nR = 64  # override\nn_max=4096\nu = 100,2\nv = 1e5\n\
             slice_base = 0,0,0,0\nslice_s = -0.5,0.5\nprecision = extended\n",
        )
        .unwrap();
        assert_eq!(c.germ, Some(PathBuf::from("a.germ")));
        assert_eq!(c.r, Some(64.0));
        assert_eq!(c.n_max, Some(4096));
        assert_eq!(c.u, Some(Complex64::new(100.0, 2.0)));
        assert_eq!(c.v, Some(Complex64::new(1e5, 0.0)));
        assert_eq!(c.slice_s, Some((-0.5, 0.5)));
        assert_eq!(c.precision, Some(Precision::Extended));
        assert_eq!(c.delta, None);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(parse_config("R 3").is_err());
        assert!(parse_config("radius = 3").is_err());
        assert!(parse_config("R = 3\nR = 4").is_err());
        assert!(parse_config("n_max = -1").is_err());
        assert!(parse_config("u = 1,2,3").is_err());
    }
}
