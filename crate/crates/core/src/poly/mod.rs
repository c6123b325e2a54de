//! Exact sparse polynomial algebra over Q.

mod gcd;
mod homogeneous;
mod json;
mod sparse;
mod vector;

pub use gcd::{gcd, gcd_homogeneous, is_unit};
pub use homogeneous::{power_table, CompiledPoly, HomogeneousPoly};
pub use json::{vector_from_json, vector_to_json, PolyJson, TermJson};
pub use sparse::{Monomial, SparsePoly};
pub use vector::{CompiledVector, PolyVector, DEFAULT_TERM_CAP};
