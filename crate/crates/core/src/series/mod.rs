//! Exact-coefficient truncated series in one and two variables.
//!
//! [`TruncPoly2`] holds germ components in `(x, y)`; [`FracSeries1`] and
//! [`FracSeries2`] hold expansions in fractional powers `u^(-1/k)` and
//! `v^(-1/(k-1))`. All values are immutable once built; every operation
//! returns a new value.

mod frac;
mod poly2;
pub(crate) mod scalar;

pub use frac::{binomial_coeffs, principal_inv_root, FracSeries1, FracSeries2};
pub use poly2::{poly_compose, TruncPoly2};
pub use scalar::{ComplexDd, Dd, Scalar};

/// Working precision for series arithmetic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Precision {
    #[default]
    Double,
    /// Double-double (about 30 significant digits).
    Extended,
}
