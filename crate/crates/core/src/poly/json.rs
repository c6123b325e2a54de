use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::homogeneous::HomogeneousPoly;
use super::sparse::{Monomial, SparsePoly};
use super::vector::PolyVector;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub exp: Vec<u32>,
    pub num: String,
    pub den: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyJson {
    pub k: usize,
    pub degree: u32,
    pub terms: Vec<TermJson>,
}

impl From<&HomogeneousPoly> for PolyJson {
    fn from(p: &HomogeneousPoly) -> Self {
        // Highest monomial first, matching how maps are usually written.
        let terms = p
            .sparse()
            .terms()
            .rev()
            .map(|(m, c)| TermJson {
                exp: m.exps().to_vec(),
                num: c.numer().to_string(),
                den: c.denom().to_string(),
            })
            .collect();
        PolyJson {
            k: p.k(),
            degree: p.degree(),
            terms,
        }
    }
}

impl TryFrom<&PolyJson> for HomogeneousPoly {
    type Error = Error;

    fn try_from(j: &PolyJson) -> Result<Self> {
        let mut p = SparsePoly::zero(j.k + 1);
        for t in &j.terms {
            if t.exp.len() != j.k + 1 {
                return Err(Error::Schema(format!("term exponent has length {}, expected {}", t.exp.len(), j.k + 1)));
            }
            let num = BigInt::from_str(t.num.trim()).map_err(|e| Error::Schema(format!("bad numerator {:?}: {e}", t.num)))?;
            let den = BigInt::from_str(t.den.trim()).map_err(|e| Error::Schema(format!("bad denominator {:?}: {e}", t.den)))?;
            if den.is_zero() {
                return Err(Error::Schema("zero denominator".into()));
            }
            p.add_term(Monomial::from_slice(&t.exp), BigRational::new(num, den));
        }
        HomogeneousPoly::new(j.k, j.degree, p)
    }
}

pub fn vector_to_json(f: &PolyVector) -> Vec<PolyJson> {
    f.components().iter().map(PolyJson::from).collect()
}

pub fn vector_from_json(v: &[PolyJson]) -> Result<PolyVector> {
    let comps = v.iter().map(HomogeneousPoly::try_from).collect::<Result<Vec<_>>>()?;
    PolyVector::new(comps)
}
