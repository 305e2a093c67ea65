//! Adaptive Gauss–Kronrod (7/15) quadrature along straight complex segments.

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_DEPTH: u32 = 40;

/// Kronrod estimate and error estimate `|K - G|` on `[a, b]` of the real
/// parameter of `t ↦ f(t)`.
fn gk15<F: FnMut(f64) -> Result<Complex64>>(f: &mut F, a: f64, b: f64) -> Result<(Complex64, f64)> {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = r * XGK[i];
        let s = f(c - dx)? + f(c + dx)?;
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    Ok((k * r, ((k - g) * r).norm()))
}

fn adapt<F: FnMut(f64) -> Result<Complex64>>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    at: &dyn Fn(f64) -> Complex64,
) -> Result<Complex64> {
    let (val, err) = gk15(f, a, b)?;
    if err <= tol || (err <= 1e-15 * val.norm()) {
        return Ok(val);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::QuadratureFailure { at: at(0.5 * (a + b)) });
    }
    let m = 0.5 * (a + b);
    Ok(adapt(f, a, m, 0.5 * tol, depth + 1, at)? + adapt(f, m, b, 0.5 * tol, depth + 1, at)?)
}

/// `∫_{z0}^{z1} f(ζ) dζ` along the segment, absolute tolerance `tol`.
pub fn integrate_segment<F>(mut f: F, z0: Complex64, z1: Complex64, tol: f64) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let d = z1 - z0;
    if d.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut g = |t: f64| Ok(f(z0 + d * t)? * d);
    let at = |t: f64| z0 + d * t;
    adapt(&mut g, 0.0, 1.0, tol, 0, &at)
}
