//! Rational and birational self-maps of P^k.

mod calibrate;
pub mod catalog;
mod conjugate;
mod contract;
mod indeterminacy;
mod json;
mod linalg;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fs_distance, fs_distance_to_subspace, orthonormalize, Point};
use crate::numeric::rational_to_f64;
use crate::poly::{HomogeneousPoly, PolyVector};

pub use calibrate::{calibrate_constants, AnalyticConstants};
pub use catalog::CatalogMap;
pub use conjugate::{conjugate, conjugate_pair};
pub use contract::{contract_construct, p3_contract_coordinates, tube_ratio, verify_contraction, ContractionReport};
pub use indeterminacy::{indeterminacy_witnesses, search_indeterminacy, SearchOptions};
pub use json::{load_map_json, map_to_json, MapJson};
pub use linalg::{mat_from_ints, mat_identity, mat_inverse, mat_mul_vec, RatMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessSource {
    Exact,
    UserParametrization,
    Sampled,
}

/// Indeterminacy locus as a witness cloud, optionally with the exact
/// linear components it was sampled from.
#[derive(Clone, Debug, PartialEq)]
pub struct IndeterminacyData {
    pub witnesses: Vec<Point>,
    /// Dimension of the locus; `-1` for the empty set.
    pub declared_dim: i32,
    pub source: WitnessSource,
    /// Exact spanning vectors of each linear component.
    pub components: Vec<Vec<Vec<BigRational>>>,
    /// True when produced by the numerical search.
    pub heuristic: bool,
    frames: Vec<Vec<Point>>,
}

impl IndeterminacyData {
    pub fn empty() -> Self {
        IndeterminacyData {
            witnesses: Vec::new(),
            declared_dim: -1,
            source: WitnessSource::Exact,
            components: Vec::new(),
            heuristic: false,
            frames: Vec::new(),
        }
    }

    /// Union of projectivized linear spans. Witnesses are drawn later.
    pub fn linear(components: Vec<Vec<Vec<BigRational>>>) -> Self {
        let declared_dim = components.iter().map(|c| c.len() as i32 - 1).max().unwrap_or(-1);
        let mut d = IndeterminacyData {
            witnesses: Vec::new(),
            declared_dim,
            source: WitnessSource::Exact,
            components,
            heuristic: false,
            frames: Vec::new(),
        };
        d.rebuild_frames();
        d
    }

    pub fn from_witnesses(witnesses: Vec<Point>, declared_dim: i32, source: WitnessSource) -> Self {
        IndeterminacyData {
            witnesses,
            declared_dim,
            source,
            components: Vec::new(),
            heuristic: source == WitnessSource::Sampled,
            frames: Vec::new(),
        }
    }

    fn rebuild_frames(&mut self) {
        self.frames = self
            .components
            .iter()
            .map(|basis| {
                let vs: Vec<Point> = basis
                    .iter()
                    .map(|v| v.iter().map(|q| Complex64::new(rational_to_f64(q), 0.0)).collect())
                    .collect();
                orthonormalize(&vs)
            })
            .collect();
    }

    pub fn is_empty(&self) -> bool {
        self.declared_dim < 0 && self.witnesses.is_empty() && self.components.is_empty()
    }

    /// Exact components known (distances are then exact, not cloud-based).
    pub fn has_components(&self) -> bool {
        !self.components.is_empty()
    }

    pub fn frames(&self) -> &[Vec<Point>] {
        &self.frames
    }

    /// FS distance to the locus; 1 for the empty set.
    pub fn distance(&self, x: &[Complex64]) -> f64 {
        if !self.frames.is_empty() {
            return self.frames.iter().map(|b| fs_distance_to_subspace(x, b)).fold(f64::INFINITY, f64::min);
        }
        if self.witnesses.is_empty() {
            return 1.0;
        }
        self.witnesses.iter().map(|w| fs_distance(x, w)).fold(f64::INFINITY, f64::min)
    }

    /// Apply a linear change of coordinates `v -> A v` to everything.
    pub fn transformed(&self, a: &RatMatrix) -> Self {
        let af: Vec<Vec<Complex64>> = a
            .iter()
            .map(|row| row.iter().map(|q| Complex64::new(rational_to_f64(q), 0.0)).collect())
            .collect();
        let witnesses = self
            .witnesses
            .iter()
            .filter_map(|w| {
                let v: Point = af.iter().map(|row| row.iter().zip(w).map(|(x, y)| x * y).sum()).collect();
                crate::geometry::normalize(&v)
            })
            .collect();
        let components = self
            .components
            .iter()
            .map(|basis| basis.iter().map(|v| mat_mul_vec(a, v)).collect())
            .collect();
        let mut d = IndeterminacyData {
            witnesses,
            declared_dim: self.declared_dim,
            source: self.source,
            components,
            heuristic: self.heuristic,
            frames: Vec::new(),
        };
        d.rebuild_frames();
        d
    }
}

/// A rational self-map of P^k given by a gcd-reduced lift.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMap {
    pub label: String,
    lift: PolyVector,
    indeterminacy: Option<IndeterminacyData>,
}

impl RationalMap {
    /// Reduces the lift and rejects constant maps. A trivial gcd leaves the
    /// lift untouched, so its scale is the caller's.
    pub fn new(label: impl Into<String>, lift: PolyVector) -> Result<Self> {
        Ok(Self::with_factor(label, lift)?.0)
    }

    /// Like [`RationalMap::new`] and also returns the removed common factor.
    pub fn with_factor(label: impl Into<String>, lift: PolyVector) -> Result<(Self, HomogeneousPoly)> {
        let (reduced, g) = lift.gcd_reduce()?;
        if reduced.degree() == 0 {
            return Err(Error::invalid("map is constant after reduction"));
        }
        Ok((
            RationalMap {
                label: label.into(),
                lift: reduced,
                indeterminacy: None,
            },
            g,
        ))
    }

    pub fn with_indeterminacy(mut self, data: IndeterminacyData) -> Self {
        self.indeterminacy = Some(data);
        self
    }

    pub fn k(&self) -> usize {
        self.lift.k()
    }

    pub fn degree(&self) -> u32 {
        self.lift.degree()
    }

    pub fn lift(&self) -> &PolyVector {
        &self.lift
    }

    pub fn indeterminacy(&self) -> Option<&IndeterminacyData> {
        self.indeterminacy.as_ref()
    }

    /// No indeterminacy, proven (exact empty data).
    pub fn is_holomorphic(&self) -> bool {
        matches!(&self.indeterminacy, Some(d) if d.source == WitnessSource::Exact && d.is_empty())
    }

    /// FS distance to the indeterminacy locus when it is known.
    pub fn distance_to_indeterminacy(&self, x: &[Complex64]) -> Option<f64> {
        self.indeterminacy.as_ref().map(|d| d.distance(x))
    }
}

/// A birational pair with `F ∘ G = P · id`.
#[derive(Clone, Debug, PartialEq)]
pub struct BirationalPair {
    pub forward: RationalMap,
    pub inverse: RationalMap,
    pub cofactor: HomogeneousPoly,
    pub s: Option<usize>,
    /// Declared degree of the backward indeterminacy set.
    pub deg_i_minus: Option<u32>,
    /// Violates the standing dimension assumption; usable for algebra only.
    pub catalog_only: bool,
}

impl BirationalPair {
    pub fn k(&self) -> usize {
        self.forward.k()
    }

    pub fn d(&self) -> u32 {
        self.forward.degree()
    }

    pub fn delta(&self) -> u32 {
        self.inverse.degree()
    }

    pub fn i_plus(&self) -> Option<&IndeterminacyData> {
        self.forward.indeterminacy()
    }

    pub fn i_minus(&self) -> Option<&IndeterminacyData> {
        self.inverse.indeterminacy()
    }

    pub fn swapped(&self) -> Result<BirationalPair> {
        let mut p = validate_birational(&self.inverse, &self.forward)?;
        p.s = self.s.map(|s| self.k() - s);
        p.deg_i_minus = None;
        p.catalog_only = self.catalog_only;
        Ok(p)
    }
}

/// Checks `F ∘ G = P · id` exactly and returns the pair with cofactor `P`.
pub fn validate_birational(f: &RationalMap, g: &RationalMap) -> Result<BirationalPair> {
    if f.k() != g.k() {
        return Err(Error::DimensionMismatch {
            expected: f.k() + 1,
            got: g.k() + 1,
        });
    }
    let comp = f.lift().compose(g.lift())?;
    let (reduced, factor) = comp.gcd_reduce()?;
    if reduced.degree() != 1 {
        return Err(Error::NotInverse(format!(
            "reduced composition has degree {}, expected 1",
            reduced.degree()
        )));
    }
    let mut scalar: Option<BigRational> = None;
    for (i, c) in reduced.components().iter().enumerate() {
        let mut terms = c.terms();
        let ok = match (terms.next(), terms.next()) {
            (Some((m, q)), None) if m.exps()[i] == 1 => {
                match &scalar {
                    None => scalar = Some(q.clone()),
                    Some(s) if s == q => {}
                    Some(_) => return Err(Error::NotInverse("components scale differently".into())),
                }
                true
            }
            _ => false,
        };
        if !ok {
            return Err(Error::NotInverse(format!("component {i} is not a multiple of z{i}")));
        }
    }
    let scalar = scalar.unwrap_or_else(|| BigRational::from_integer(BigInt::from(1)));
    let cofactor = factor.scale(&scalar);
    debug_assert_eq!(cofactor.degree() + 1, f.degree() * g.degree());
    Ok(BirationalPair {
        forward: f.clone(),
        inverse: g.clone(),
        cofactor,
        s: None,
        deg_i_minus: None,
        catalog_only: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pair_has_unit_cofactor() {
        let id = RationalMap::new("id", PolyVector::identity(2)).unwrap();
        let p = validate_birational(&id, &id).unwrap();
        assert_eq!(p.cofactor.degree(), 0);
        assert_eq!(
            p.cofactor.eval_exact(&vec![BigRational::from_integer(BigInt::from(1)); 3]).unwrap(),
            BigRational::from_integer(BigInt::from(1))
        );
    }

    #[test]
    fn non_inverse_is_rejected() {
        let f = catalog::cremona().forward;
        let g = catalog::henon_default().forward;
        assert!(matches!(validate_birational(&f, &g), Err(Error::NotInverse(_))));
    }
}
