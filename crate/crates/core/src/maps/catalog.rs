//! Reference maps with exact inverses and exact indeterminacy components.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::conjugate::conjugate_pair;
use super::linalg::mat_from_ints;
use super::{validate_birational, BirationalPair, IndeterminacyData, RationalMap};
use crate::error::{Error, Result};
use crate::geometry::random_in_span;
use crate::poly::{HomogeneousPoly, Monomial, PolyVector, SparsePoly};

/// Witnesses drawn per stored component.
const WITNESSES_PER_COMPONENT: usize = 8;

/// A catalog entry: either a bare map or a validated birational pair.
#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum CatalogMap {
    Map(RationalMap),
    Pair(BirationalPair),
}

impl CatalogMap {
    pub fn forward(&self) -> &RationalMap {
        match self {
            CatalogMap::Map(m) => m,
            CatalogMap::Pair(p) => &p.forward,
        }
    }

    pub fn pair(&self) -> Option<&BirationalPair> {
        match self {
            CatalogMap::Map(_) => None,
            CatalogMap::Pair(p) => Some(p),
        }
    }
}

pub struct CatalogInfo {
    pub label: &'static str,
    pub params: &'static str,
    pub summary: &'static str,
}

pub const CATALOG: &[CatalogInfo] = &[
    CatalogInfo {
        label: "henon",
        params: "c=-6,delta=1/2",
        summary: "[yt : y^2+ct^2-delta*xt : t^2] on P^2",
    },
    CatalogInfo {
        label: "henon_conj",
        params: "c=-6,delta=1/2",
        summary: "Henon map in coordinates where I+ and I- are not orthogonal",
    },
    CatalogInfo {
        label: "power_map",
        params: "k=1,d=2",
        summary: "[z_0^d : ... : z_k^d]",
    },
    CatalogInfo {
        label: "cremona",
        params: "",
        summary: "[yz : xz : xy], algebraically unstable involution",
    },
    CatalogInfo {
        label: "p3_example",
        params: "",
        summary: "[yz : xz : zt+y^2 : z^2] on P^3 (algebra only)",
    },
    CatalogInfo {
        label: "regular_c3",
        params: "a=1,c=0",
        summary: "extension of (x,y,z) -> (az+x^2+c, ax+y^2+c, y), s=2",
    },
    CatalogInfo {
        label: "linear_diag",
        params: "",
        summary: "diag(4,2,1) on P^2",
    },
];

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn term(c: BigRational, e: &[u32]) -> SparsePoly {
    SparsePoly::term(Monomial::from_slice(e), c)
}

fn lift(k: usize, degree: u32, comps: Vec<SparsePoly>) -> PolyVector {
    PolyVector::new(
        comps
            .into_iter()
            .map(|p| HomogeneousPoly::new(k, degree, p).expect("homogeneous"))
            .collect(),
    )
    .expect("consistent components")
}

fn unit(n: usize, j: usize) -> Vec<BigRational> {
    (0..n).map(|i| if i == j { BigRational::one() } else { BigRational::zero() }).collect()
}

/// Exact linear components with a fixed witness sample.
fn components(n: usize, spans: &[&[usize]], seed: u64) -> IndeterminacyData {
    let comps: Vec<Vec<Vec<BigRational>>> = spans.iter().map(|s| s.iter().map(|&j| unit(n, j)).collect()).collect();
    with_witnesses(IndeterminacyData::linear(comps), WITNESSES_PER_COMPONENT, seed)
}

/// Draws `per_component` witnesses from each stored linear component.
pub fn with_witnesses(mut data: IndeterminacyData, per_component: usize, seed: u64) -> IndeterminacyData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ws = Vec::new();
    for frame in data.frames() {
        if frame.len() == 1 {
            ws.push(frame[0].clone());
            continue;
        }
        for _ in 0..per_component {
            ws.push(random_in_span(frame, &mut rng));
        }
    }
    data.witnesses = ws;
    data
}

fn pair(f: RationalMap, g: RationalMap, s: Option<usize>, deg_i_minus: Option<u32>, catalog_only: bool) -> BirationalPair {
    let mut p = validate_birational(&f, &g).expect("catalog pair is birational");
    p.s = s;
    p.deg_i_minus = deg_i_minus;
    p.catalog_only = catalog_only;
    p
}

/// Hénon map `(x,y) -> (y, y^2 + c - delta x)` on P^2, coordinates `[x:y:t]`.
pub fn henon(c: BigRational, delta: BigRational) -> Result<BirationalPair> {
    if delta.is_zero() {
        return Err(Error::invalid("Henon jacobian must be nonzero"));
    }
    let f = lift(
        2,
        2,
        vec![
            term(q(1), &[0, 1, 1]),
            term(q(1), &[0, 2, 0])
                .add(&term(c.clone(), &[0, 0, 2]))
                .add(&term(-delta.clone(), &[1, 0, 1])),
            term(q(1), &[0, 0, 2]),
        ],
    );
    let g = lift(
        2,
        2,
        vec![
            term(q(1), &[2, 0, 0]).add(&term(c, &[0, 0, 2])).add(&term(q(-1), &[0, 1, 1])),
            term(delta.clone(), &[1, 0, 1]),
            term(delta, &[0, 0, 2]),
        ],
    );
    let f = RationalMap::new("henon", f)?.with_indeterminacy(components(3, &[&[0]], 11));
    let g = RationalMap::new("henon^-1", g)?.with_indeterminacy(components(3, &[&[1]], 12));
    Ok(pair(f, g, Some(1), Some(1), false))
}

/// Horseshoe parameters `c = -6`, `delta = 1/2`.
pub fn henon_default() -> BirationalPair {
    henon(q(-6), BigRational::new(BigInt::from(1), BigInt::from(2))).expect("valid parameters")
}

/// Conjugator moving the Hénon indeterminacy points off orthogonal axes.
pub fn henon_conj_matrix() -> super::RatMatrix {
    mat_from_ints(&[&[1, 1, 0], &[0, 1, 0], &[1, 0, 1]])
}

pub fn henon_conj(c: BigRational, delta: BigRational) -> Result<BirationalPair> {
    conjugate_pair(&henon(c, delta)?, &henon_conj_matrix(), "henon_conj")
}

/// `[z_0^d : ... : z_k^d]`, holomorphic.
pub fn power_map(k: usize, d: u32) -> Result<RationalMap> {
    if d == 0 {
        return Err(Error::invalid("degree must be positive"));
    }
    let n = k + 1;
    let comps = (0..n)
        .map(|j| {
            let mut e = vec![0u32; n];
            e[j] = d;
            term(q(1), &e)
        })
        .collect();
    Ok(RationalMap::new("power_map", lift(k, d, comps))?.with_indeterminacy(IndeterminacyData::empty()))
}

/// The standard quadratic involution `[yz : xz : xy]`.
pub fn cremona() -> BirationalPair {
    let mk = |label: &str, seed| {
        let f = lift(2, 2, vec![term(q(1), &[0, 1, 1]), term(q(1), &[1, 0, 1]), term(q(1), &[1, 1, 0])]);
        RationalMap::new(label, f)
            .expect("nonconstant")
            .with_indeterminacy(components(3, &[&[0], &[1], &[2]], seed))
    };
    pair(mk("cremona", 21), mk("cremona^-1", 22), Some(1), Some(3), false)
}

/// `[yz : xz : zt + y^2 : z^2]` on P^3 with inverse `[yt : xt : t^2 : zt - x^2]`.
/// Its indeterminacy sets are both lines, so the dimension relation for
/// `s` does not hold; it is kept for exact algebra.
pub fn p3_example() -> BirationalPair {
    let f = lift(
        3,
        2,
        vec![
            term(q(1), &[0, 1, 1, 0]),
            term(q(1), &[1, 0, 1, 0]),
            term(q(1), &[0, 0, 1, 1]).add(&term(q(1), &[0, 2, 0, 0])),
            term(q(1), &[0, 0, 2, 0]),
        ],
    );
    let g = lift(
        3,
        2,
        vec![
            term(q(1), &[0, 1, 0, 1]),
            term(q(1), &[1, 0, 0, 1]),
            term(q(1), &[0, 0, 0, 2]),
            term(q(1), &[0, 0, 1, 1]).add(&term(q(-1), &[2, 0, 0, 0])),
        ],
    );
    let f = RationalMap::new("p3_example", f)
        .unwrap()
        .with_indeterminacy(components(4, &[&[0, 3]], 31));
    let g = RationalMap::new("p3_example^-1", g)
        .unwrap()
        .with_indeterminacy(components(4, &[&[1, 2]], 32));
    pair(f, g, Some(1), Some(1), true)
}

/// Extension to P^3 of the polynomial automorphism
/// `(x, y, z) -> (a z + x^2 + c, a x + y^2 + c, y)`; `d = 2`, `delta = 4`, `s = 2`.
pub fn regular_auto_c3(a: BigRational, c: BigRational) -> Result<BirationalPair> {
    if a.is_zero() {
        return Err(Error::invalid("parameter a must be nonzero"));
    }
    let f = lift(
        3,
        2,
        vec![
            term(a.clone(), &[0, 0, 1, 1])
                .add(&term(q(1), &[2, 0, 0, 0]))
                .add(&term(c.clone(), &[0, 0, 0, 2])),
            term(a.clone(), &[1, 0, 0, 1])
                .add(&term(q(1), &[0, 2, 0, 0]))
                .add(&term(c.clone(), &[0, 0, 0, 2])),
            term(q(1), &[0, 1, 0, 1]),
            term(q(1), &[0, 0, 0, 2]),
        ],
    );
    // w = Y T - Z^2 - c T^2
    let w = term(q(1), &[0, 1, 0, 1])
        .add(&term(q(-1), &[0, 0, 2, 0]))
        .add(&term(-c.clone(), &[0, 0, 0, 2]));
    let a2 = &a * &a;
    let a3 = &a2 * &a;
    let t2 = term(q(1), &[0, 0, 0, 2]);
    let g = lift(
        3,
        4,
        vec![
            w.mul(&t2).scale(&a2),
            term(a3.clone(), &[0, 0, 1, 3]),
            term(a2.clone(), &[1, 0, 0, 3]).add(&term(-(&a2 * &c), &[0, 0, 0, 4])).sub(&w.mul(&w)),
            term(a3, &[0, 0, 0, 4]),
        ],
    );
    let f = RationalMap::new("regular_c3", f)?.with_indeterminacy(components(4, &[&[2]], 41));
    let g = RationalMap::new("regular_c3^-1", g)?.with_indeterminacy(components(4, &[&[0, 1]], 42));
    Ok(pair(f, g, Some(2), Some(1), false))
}

/// `diag(4, 2, 1)` on P^2 with its inverse.
pub fn linear_diag() -> BirationalPair {
    let f = PolyVector::linear(&mat_from_ints(&[&[4, 0, 0], &[0, 2, 0], &[0, 0, 1]])).unwrap();
    let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let g = PolyVector::linear(&[vec![quarter, q(0), q(0)], vec![q(0), half, q(0)], vec![q(0), q(0), q(1)]]).unwrap();
    let f = RationalMap::new("linear_diag", f).unwrap().with_indeterminacy(IndeterminacyData::empty());
    let g = RationalMap::new("linear_diag^-1", g)
        .unwrap()
        .with_indeterminacy(IndeterminacyData::empty());
    pair(f, g, None, None, false)
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::invalid(format!("bad rational parameter {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let digits = format!("{}{}", ip.trim_start_matches('-'), fp);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let v = BigRational::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?))
}

/// Looks up `label` or `label:key=value,...`.
pub fn by_label(text: &str) -> Result<CatalogMap> {
    let (name, params) = text.split_once(':').unwrap_or((text, ""));
    let info = CATALOG
        .iter()
        .find(|c| c.label == name)
        .ok_or_else(|| Error::invalid(format!("unknown catalog label {name:?}")))?;
    let mut kv: Vec<(String, String)> = info
        .params
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (k, v) = s.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect();
    for p in params.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("parameter {p:?} is not key=value")))?;
        let slot = kv
            .iter_mut()
            .find(|(kk, _)| kk == k.trim())
            .ok_or_else(|| Error::invalid(format!("{name} has no parameter {k:?}")))?;
        slot.1 = v.trim().to_string();
    }
    let get = |k: &str| -> Result<BigRational> { parse_rational(&kv.iter().find(|(kk, _)| kk == k).unwrap().1) };
    let get_int = |k: &str| -> Result<u32> {
        let v = get(k)?;
        if !v.is_integer() || v < BigRational::zero() {
            return Err(Error::invalid(format!("{k} must be a non-negative integer")));
        }
        Ok(num_traits::ToPrimitive::to_u32(&v.to_integer()).unwrap_or(0))
    };
    let label = if params.is_empty() { name.to_string() } else { text.to_string() };
    let mut out = match name {
        "henon" => CatalogMap::Pair(henon(get("c")?, get("delta")?)?),
        "henon_conj" => CatalogMap::Pair(henon_conj(get("c")?, get("delta")?)?),
        "power_map" => CatalogMap::Map(power_map(get_int("k")? as usize, get_int("d")?)?),
        "cremona" => CatalogMap::Pair(cremona()),
        "p3_example" => CatalogMap::Pair(p3_example()),
        "regular_c3" => CatalogMap::Pair(regular_auto_c3(get("a")?, get("c")?)?),
        "linear_diag" => CatalogMap::Pair(linear_diag()),
        _ => unreachable!(),
    };
    match &mut out {
        CatalogMap::Map(m) => m.label = label,
        CatalogMap::Pair(p) => {
            p.forward.label = label.clone();
            p.inverse.label = format!("{label}^-1");
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cofactor_degrees_match_degree_product() {
        for p in [
            henon_default(),
            cremona(),
            p3_example(),
            regular_auto_c3(q(1), q(0)).unwrap(),
            linear_diag(),
        ] {
            assert_eq!(p.cofactor.degree() + 1, p.d() * p.delta(), "{}", p.forward.label);
        }
    }

    #[test]
    fn p3_cofactor_is_t_cubed() {
        let p = p3_example();
        assert_eq!(p.cofactor, HomogeneousPoly::from_terms(3, 3, &[(&[0, 0, 0, 3], 1)]).unwrap());
    }

    #[test]
    fn henon_cofactor_is_delta_squared_t_cubed() {
        let p = henon(q(3), q(5)).unwrap();
        assert_eq!(p.cofactor, HomogeneousPoly::from_terms(2, 3, &[(&[0, 0, 3], 25)]).unwrap());
    }

    #[test]
    fn regular_c3_inverse_validates_both_ways() {
        let p = regular_auto_c3(q(2), q(-1)).unwrap();
        assert_eq!(p.delta(), 4);
        validate_birational(&p.inverse, &p.forward).unwrap();
    }

    #[test]
    fn label_parameters_override_defaults() {
        let m = by_label("power_map:k=2,d=3").unwrap();
        assert_eq!(m.forward().k(), 2);
        assert_eq!(m.forward().degree(), 3);
        assert!(by_label("henon:c=0.3,delta=1/2").is_ok());
        assert!(by_label("henon:q=1").is_err());
        assert!(by_label("nope").is_err());
    }

    #[test]
    fn decimal_parameters_are_exact() {
        assert_eq!(parse_rational("-0.25").unwrap(), BigRational::new(BigInt::from(-1), BigInt::from(4)));
    }
}
