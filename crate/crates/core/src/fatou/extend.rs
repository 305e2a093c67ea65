//! `ω` and `τ` pulled back along orbits of `f₀`:
//! `ω∘ψ₀(x, y) = ω∘ψ₀(x_n, y_n) - n` once `ψ₀(x_n, y_n) ∈ Ω`.

use num_complex::Complex64;

use super::FatouContext;
use crate::coords::{in_region_uv, psi0, psi0_inverse};
use crate::error::Result;

/// Orbits leaving this ball are abandoned.
pub const ESCAPE_BOUND: f64 = 1e100;
/// Relative distance within which an orbit point counts as lying on the
/// chart branch used by the orbit map.
pub const BRANCH_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    Attracted {
        n_entry: u64,
        tau: Complex64,
        omega: Complex64,
        /// Both limits met the doubling tolerance.
        confident: bool,
    },
    /// Not seen to enter `Ω` within the budget; not a claim of escape.
    NotDetected,
    /// The orbit hit `xy = 0`.
    ChartSingular,
}

impl Verdict {
    pub fn is_attracted(&self) -> bool {
        matches!(self, Verdict::Attracted { .. })
    }
}

/// Where an orbit of `f₀` first lands on the chart branch of `Ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Entry {
    Entered { n: u64, u: Complex64, v: Complex64 },
    NotDetected,
    ChartSingular,
}

/// Iterates `f₀` from `(x, y)` (original coordinates) for at most `budget`
/// steps. A point enters when `ψ₀(x_n, y_n) ∈ Ω` and `(x_n, y_n)` is the
/// branch of `ψ₀⁻¹` that the chart map continues with; other preimages of
/// `Ω` are different components and are not claimed.
pub fn find_entry(ctx: &FatouContext, x: Complex64, y: Complex64, budget: u64) -> Result<Entry> {
    let k = ctx.params.k;
    let (mut x, mut y) = ctx.germ.conj.to_normal(x, y);
    for n in 0..=budget {
        if x == Complex64::new(0.0, 0.0) || y == Complex64::new(0.0, 0.0) {
            return Ok(Entry::ChartSingular);
        }
        if !(x.is_finite() && y.is_finite()) || x.norm().max(y.norm()) > ESCAPE_BOUND {
            return Ok(Entry::NotDetected);
        }
        let (u, v) = psi0(x, y, k)?;
        if in_region_uv(u, v, &ctx.params) {
            let (bx, by) = psi0_inverse(u, v, k)?;
            if (bx - x).norm() <= BRANCH_TOL * x.norm() && (by - y).norm() <= BRANCH_TOL * y.norm() {
                return Ok(Entry::Entered { n, u, v });
            }
        }
        if n < budget {
            (x, y) = ctx.map.step_xy(x, y);
        }
    }
    Ok(Entry::NotDetected)
}

/// `(τ, ω)` at `(x, y)` through the first entry of its orbit into `Ω`:
/// `ω(x, y) = ω(u_n, v_n) - n`, `τ(x, y) = τ(u_n, v_n)`.
pub fn extend_along_orbit(ctx: &FatouContext, x: Complex64, y: Complex64, budget: u64) -> Result<Verdict> {
    Ok(match find_entry(ctx, x, y, budget)? {
        Entry::Entered { n, u, v } => {
            let r = ctx.limits(u, v)?;
            Verdict::Attracted {
                n_entry: n,
                tau: r.tau.value,
                omega: r.omega.value - n as f64,
                confident: r.omega.converged && r.tau.converged,
            }
        }
        Entry::NotDetected => Verdict::NotDetected,
        Entry::ChartSingular => Verdict::ChartSingular,
    })
}
