//! Basin slices: per-pixel orbit classification and PPM/CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fatou::{extend_along_orbit, FatouContext, Verdict};

/// An affine real 2-plane of ℂ², sampled at pixel centres.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSpec {
    pub base: (Complex64, Complex64),
    /// Direction of the horizontal parameter `s`.
    pub dir_s: (Complex64, Complex64),
    /// Direction of the vertical parameter `t`.
    pub dir_t: (Complex64, Complex64),
    pub s_range: (f64, f64),
    pub t_range: (f64, f64),
    pub width: usize,
    pub height: usize,
    /// Orbit budget before a pixel is declared not detected.
    pub n_entry: u64,
}

impl SliceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParams("slice needs at least one pixel".into()));
        }
        if !(self.s_range.0 < self.s_range.1 && self.t_range.0 < self.t_range.1) {
            return Err(Error::InvalidParams("slice ranges must be nonempty".into()));
        }
        Ok(())
    }

    /// Point of ℂ² at the centre of pixel `(col, row)`; row 0 is the top,
    /// i.e. the largest `t`.
    pub fn point(&self, col: usize, row: usize) -> (Complex64, Complex64) {
        let s = self.s_range.0 + (col as f64 + 0.5) / self.width as f64 * (self.s_range.1 - self.s_range.0);
        let t = self.t_range.1 - (row as f64 + 0.5) / self.height as f64 * (self.t_range.1 - self.t_range.0);
        (self.base.0 + self.dir_s.0 * s + self.dir_t.0 * t, self.base.1 + self.dir_s.1 * s + self.dir_t.1 * t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub cells: Vec<Verdict>,
    /// Pixels whose evaluation raised an error; they are stored as not
    /// detected.
    pub failures: usize,
}

impl Grid {
    pub fn attracted(&self) -> usize {
        self.cells.iter().filter(|v| v.is_attracted()).count()
    }
}

/// Classifies every pixel. Rows are distributed over the rayon pool; the
/// result does not depend on the number of workers.
pub fn scan(ctx: &FatouContext, spec: &SliceSpec) -> Result<Grid> {
    spec.validate()?;
    let rows: Vec<Vec<(Verdict, bool)>> = (0..spec.height)
        .into_par_iter()
        .map(|row| {
            (0..spec.width)
                .map(|col| {
                    let (x, y) = spec.point(col, row);
                    match extend_along_orbit(ctx, x, y, spec.n_entry) {
                        Ok(v) => (v, false),
                        Err(_) => (Verdict::NotDetected, true),
                    }
                })
                .collect()
        })
        .collect();
    let failures = rows.iter().flatten().filter(|c| c.1).count();
    let cells = rows.into_iter().flatten().map(|c| c.0).collect();
    Ok(Grid { width: spec.width, height: spec.height, cells, failures })
}

/// Hexcone HSV → RGB, channels rounded to bytes.
pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let h6 = (h - h.floor()) * 6.0;
    let i = h6.floor();
    let f = h6 - i;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let (r, g, b) = match i as u32 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [r, g, b].map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8)
}

pub fn pixel_color(v: &Verdict) -> [u8; 3] {
    match v {
        Verdict::NotDetected => [0, 0, 0],
        Verdict::ChartSingular => [255, 255, 255],
        Verdict::Attracted { n_entry, omega, .. } => {
            hsv_to_rgb(omega.re - omega.re.floor(), 1.0, 1.0 / (1.0 + *n_entry as f64 / 64.0))
        }
    }
}

pub fn write_ppm<W: Write>(grid: &Grid, mut out: W) -> Result<()> {
    write!(out, "P6\n{} {}\n255\n", grid.width, grid.height)?;
    for v in &grid.cells {
        out.write_all(&pixel_color(v))?;
    }
    out.flush()?;
    Ok(())
}

pub fn emit_ppm(grid: &Grid, path: &Path) -> Result<()> {
    write_ppm(grid, BufWriter::new(File::create(path)?))
}

/// Companion table: `x, y, verdict, n_entry, re_tau, im_tau, re_omega, im_omega`.
pub fn write_csv<W: Write>(grid: &Grid, mut out: W) -> Result<()> {
    writeln!(out, "x,y,verdict,n_entry,re_tau,im_tau,re_omega,im_omega")?;
    for (i, v) in grid.cells.iter().enumerate() {
        let (x, y) = (i % grid.width, i / grid.width);
        match v {
            Verdict::Attracted { n_entry, tau, omega, .. } => {
                writeln!(out, "{x},{y},attracted,{n_entry},{:e},{:e},{:e},{:e}", tau.re, tau.im, omega.re, omega.im)?
            }
            Verdict::NotDetected => writeln!(out, "{x},{y},not_detected,,,,,")?,
            Verdict::ChartSingular => writeln!(out, "{x},{y},chart_singular,,,,,")?,
        }
    }
    out.flush()?;
    Ok(())
}

pub fn emit_csv(grid: &Grid, path: &Path) -> Result<()> {
    write_csv(grid, BufWriter::new(File::create(path)?))
}
