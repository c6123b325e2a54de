//! Computational toolkit for rational and birational self-maps of complex
//! projective space: exact degree dynamics, Green potentials, sampled
//! equilibrium measures and ergodic diagnostics.

// `!(x >= y)` is the NaN-aware comparison used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod degrees;
pub mod ergodics;
pub mod error;
pub mod geometry;
pub mod maps;
pub mod measures;
pub mod numeric;
pub mod poly;
pub mod potentials;
pub mod stats;
pub mod stream;

pub use error::{Error, Result};
pub use numeric::{Cx, Mp, Precision, Real};
pub use poly::{HomogeneousPoly, Monomial, PolyVector, SparsePoly};
