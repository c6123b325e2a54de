use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::catalog::CatalogMap;
use super::{validate_birational, IndeterminacyData, RationalMap, WitnessSource};
use crate::error::{Error, Result};
use crate::poly::{vector_from_json, vector_to_json, PolyJson};

/// Map-definition file. Points are lists of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapJson {
    pub label: String,
    pub k: usize,
    pub forward: Vec<PolyJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<Vec<PolyJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub indeterminacy: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
    /// Dimension, provenance and exact components of each locus.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub indeterminacy_meta: BTreeMap<String, LocusMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deg_i_minus: Option<u32>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub catalog_only: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocusMeta {
    pub dim: i32,
    pub source: WitnessSource,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<Vec<Vec<String>>>,
    #[serde(default)]
    pub heuristic: bool,
}

fn locus_to_json(d: &IndeterminacyData) -> (Vec<Vec<[f64; 2]>>, LocusMeta) {
    let pts = d.witnesses.iter().map(|w| w.iter().map(|c| [c.re, c.im]).collect()).collect();
    let components = d
        .components
        .iter()
        .map(|b| b.iter().map(|v| v.iter().map(|q| q.to_string()).collect()).collect())
        .collect();
    (
        pts,
        LocusMeta {
            dim: d.declared_dim,
            source: d.source,
            components,
            heuristic: d.heuristic,
        },
    )
}

fn parse_q(s: &str) -> Result<BigRational> {
    let bad = || Error::Schema(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.parse().map_err(|_| bad())?;
            if d == BigInt::from(0) {
                return Err(bad());
            }
            Ok(BigRational::new(n.parse().map_err(|_| bad())?, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

fn locus_from_json(pts: Option<&Vec<Vec<[f64; 2]>>>, meta: Option<&LocusMeta>, k: usize) -> Result<Option<IndeterminacyData>> {
    let witnesses: Vec<Vec<Complex64>> = pts
        .map(|p| p.iter().map(|w| w.iter().map(|c| Complex64::new(c[0], c[1])).collect()).collect())
        .unwrap_or_default();
    for w in &witnesses {
        if w.len() != k + 1 {
            return Err(Error::Schema(format!("witness has {} coordinates, expected {}", w.len(), k + 1)));
        }
    }
    let Some(meta) = meta else {
        if witnesses.is_empty() {
            return Ok(None);
        }
        return Ok(Some(IndeterminacyData::from_witnesses(witnesses, -1, WitnessSource::UserParametrization)));
    };
    let comps = meta
        .components
        .iter()
        .map(|b| {
            b.iter()
                .map(|v| v.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut d = if comps.is_empty() {
        IndeterminacyData::from_witnesses(witnesses, meta.dim, meta.source)
    } else {
        let mut d = IndeterminacyData::linear(comps);
        d.witnesses = witnesses;
        d.source = meta.source;
        d
    };
    d.declared_dim = meta.dim;
    d.heuristic = meta.heuristic;
    Ok(Some(d))
}

pub fn map_to_json(m: &CatalogMap) -> MapJson {
    let f = m.forward();
    let mut out = MapJson {
        label: f.label.clone(),
        k: f.k(),
        forward: vector_to_json(f.lift()),
        inverse: None,
        s: None,
        indeterminacy: BTreeMap::new(),
        indeterminacy_meta: BTreeMap::new(),
        deg_i_minus: None,
        catalog_only: false,
    };
    let mut put = |key: &str, d: Option<&IndeterminacyData>| {
        if let Some(d) = d {
            let (p, meta) = locus_to_json(d);
            out.indeterminacy.insert(key.to_string(), p);
            out.indeterminacy_meta.insert(key.to_string(), meta);
        }
    };
    put("forward", f.indeterminacy());
    if let Some(p) = m.pair() {
        put("inverse", p.inverse.indeterminacy());
        out.inverse = Some(vector_to_json(p.inverse.lift()));
        out.s = p.s;
        out.deg_i_minus = p.deg_i_minus;
        out.catalog_only = p.catalog_only;
    }
    out
}

/// Parses and validates a map file. Returns warnings (e.g. a removed common
/// factor) alongside the map.
pub fn load_map_json(text: &str) -> Result<(CatalogMap, Vec<String>)> {
    let j: MapJson = serde_json::from_str(text)?;
    let mut warnings = Vec::new();
    let fwd = vector_from_json(&j.forward)?;
    if fwd.k() != j.k {
        return Err(Error::Schema(format!("forward has k = {}, file says {}", fwd.k(), j.k)));
    }
    let (mut f, g) = RationalMap::with_factor(j.label.clone(), fwd)?;
    if g.degree() > 0 {
        warnings.push(format!(
            "forward lift had a common factor of degree {}; using the reduced map of degree {}",
            g.degree(),
            f.degree()
        ));
    }
    if let Some(d) = locus_from_json(j.indeterminacy.get("forward"), j.indeterminacy_meta.get("forward"), j.k)? {
        f = f.with_indeterminacy(d);
    }
    let Some(inv) = &j.inverse else {
        if j.s.is_some() {
            return Err(Error::Schema("s given without an inverse".into()));
        }
        return Ok((CatalogMap::Map(f), warnings));
    };
    let inv = vector_from_json(inv)?;
    let (mut ginv, gg) = RationalMap::with_factor(format!("{}^-1", j.label), inv)?;
    if gg.degree() > 0 {
        warnings.push(format!("inverse lift had a common factor of degree {}", gg.degree()));
    }
    if let Some(d) = locus_from_json(j.indeterminacy.get("inverse"), j.indeterminacy_meta.get("inverse"), j.k)? {
        ginv = ginv.with_indeterminacy(d);
    }
    let mut pair = validate_birational(&f, &ginv)?;
    if let Some(s) = j.s {
        if s == 0 || s >= j.k {
            return Err(Error::Schema(format!("s = {s} outside [1, k-1]")));
        }
    }
    pair.s = j.s;
    pair.deg_i_minus = j.deg_i_minus;
    pair.catalog_only = j.catalog_only;
    Ok((CatalogMap::Pair(pair), warnings))
}

#[cfg(test)]
mod tests {
    use super::super::catalog::{by_label, CATALOG};
    use super::*;

    #[test]
    fn every_catalog_map_round_trips() {
        for info in CATALOG {
            let m = by_label(info.label).unwrap();
            let text = serde_json::to_string_pretty(&map_to_json(&m)).unwrap();
            let (back, warnings) = load_map_json(&text).unwrap();
            assert!(warnings.is_empty());
            assert_eq!(back, m, "{}", info.label);
        }
    }

    #[test]
    fn common_factor_is_removed_with_warning() {
        let m = by_label("henon").unwrap();
        let mut j = map_to_json(&m);
        j.inverse = None;
        j.s = None;
        for c in j.forward.iter_mut() {
            c.degree += 1;
            for t in c.terms.iter_mut() {
                t.exp[2] += 1;
            }
        }
        let (back, warnings) = load_map_json(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(back.forward().lift(), m.forward().lift());
    }

    #[test]
    fn corrupted_json_reports_position() {
        let err = load_map_json("{\"label\": \"x\", \"k\": 2,, }").unwrap_err();
        match err {
            Error::Json(e) => assert!(e.line() >= 1 && e.column() > 0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
