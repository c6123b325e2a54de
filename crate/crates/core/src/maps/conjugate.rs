use super::linalg::{mat_inverse, RatMatrix};
use super::{validate_birational, BirationalPair, RationalMap};
use crate::error::{Error, Result};
use crate::poly::PolyVector;

/// Lift of `B ∘ f ∘ A^{-1}`, gcd-reduced. Indeterminacy data, when present,
/// is carried to the new coordinates by `A`.
pub fn conjugate(f: &RationalMap, a: &RatMatrix, b: &RatMatrix) -> Result<RationalMap> {
    let n = f.k() + 1;
    if a.len() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.len().min(b.len()),
        });
    }
    let a_inv = mat_inverse(a)?;
    mat_inverse(b)?;
    let lift = PolyVector::linear(b)?.compose(f.lift())?.compose(&PolyVector::linear(&a_inv)?)?;
    let mut g = RationalMap::new(f.label.clone(), lift)?;
    if let Some(d) = f.indeterminacy() {
        g = g.with_indeterminacy(d.transformed(a));
    }
    Ok(g)
}

/// Conjugates both maps of a pair by the same `A` and revalidates.
pub fn conjugate_pair(pair: &BirationalPair, a: &RatMatrix, label: &str) -> Result<BirationalPair> {
    let mut f = conjugate(&pair.forward, a, a)?;
    let mut g = conjugate(&pair.inverse, a, a)?;
    f.label = label.to_string();
    g.label = format!("{label}^-1");
    let mut p = validate_birational(&f, &g)?;
    p.s = pair.s;
    p.deg_i_minus = pair.deg_i_minus;
    p.catalog_only = pair.catalog_only;
    Ok(p)
}
