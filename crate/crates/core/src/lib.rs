//! Attracting domains and Fatou coordinates for holomorphic germs of `C^2`
//! tangent to the identity whose only characteristic direction is
//! non-degenerate.
//!
//! The pipeline runs germ analysis ([`germ`]), linear normalization
//! ([`normal_form`]), the sector chart ([`coords`]), asymptotic expansions
//! ([`expansion`]), Fatou and conjugacy coordinates ([`fatou`]) and basin
//! rendering ([`render`]).

pub mod cli;
pub mod coords;
pub mod error;
pub mod expansion;
pub mod fatou;
pub mod germ;
pub mod normal_form;
pub mod render;
pub mod series;

pub use error::{Error, Result};
