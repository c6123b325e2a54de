use num_bigint::BigInt;
use num_rational::BigRational;
use smallvec::SmallVec;

use super::sparse::{Monomial, SparsePoly};
use crate::error::{Error, Result};
use crate::numeric::{Cx, Precision, Real};

/// Homogeneous polynomial in the k+1 coordinates of P^k.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HomogeneousPoly {
    k: usize,
    degree: u32,
    poly: SparsePoly,
}

impl HomogeneousPoly {
    pub fn new(k: usize, degree: u32, poly: SparsePoly) -> Result<Self> {
        if poly.nvars() != k + 1 {
            return Err(Error::DimensionMismatch {
                expected: k + 1,
                got: poly.nvars(),
            });
        }
        if !poly.is_homogeneous_of(degree) {
            return Err(Error::NotHomogeneous(degree));
        }
        Ok(HomogeneousPoly { k, degree, poly })
    }

    /// Builds from a sparse polynomial, reading the degree off its terms.
    /// The zero polynomial gets degree `fallback`.
    pub fn from_sparse(k: usize, poly: SparsePoly, fallback: u32) -> Result<Self> {
        let degree = poly.total_degree().unwrap_or(fallback);
        Self::new(k, degree, poly)
    }

    pub fn from_terms(k: usize, degree: u32, terms: &[(&[u32], i64)]) -> Result<Self> {
        let mut p = SparsePoly::zero(k + 1);
        for (e, c) in terms {
            if e.len() != k + 1 {
                return Err(Error::DimensionMismatch {
                    expected: k + 1,
                    got: e.len(),
                });
            }
            p.add_term(Monomial::from_slice(e), BigRational::from_integer(BigInt::from(*c)));
        }
        Self::new(k, degree, p)
    }

    pub fn zero(k: usize, degree: u32) -> Self {
        HomogeneousPoly {
            k,
            degree,
            poly: SparsePoly::zero(k + 1),
        }
    }

    pub fn var(k: usize, j: usize) -> Self {
        HomogeneousPoly {
            k,
            degree: 1,
            poly: SparsePoly::var(k + 1, j),
        }
    }

    pub fn constant(k: usize, c: BigRational) -> Self {
        HomogeneousPoly {
            k,
            degree: 0,
            poly: SparsePoly::constant(k + 1, c),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn sparse(&self) -> &SparsePoly {
        &self.poly
    }

    pub fn into_sparse(self) -> SparsePoly {
        self.poly
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn term_count(&self) -> usize {
        self.poly.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.poly.terms()
    }

    pub fn eval_exact(&self, z: &[BigRational]) -> Result<BigRational> {
        if z.len() != self.k + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.k + 1,
                got: z.len(),
            });
        }
        Ok(self.poly.eval_exact(z))
    }

    /// Evaluate at a complex point at the given precision.
    pub fn eval_float<T: Real>(&self, z: &[Cx<T>], precision: Precision) -> Result<Cx<T>> {
        if z.len() != self.k + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.k + 1,
                got: z.len(),
            });
        }
        Ok(CompiledPoly::<T>::new(self, precision).eval(z))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(HomogeneousPoly {
            k: self.k,
            degree: self.degree,
            poly: self.poly.add(&other.poly),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(HomogeneousPoly {
            k: self.k,
            degree: self.degree,
            poly: self.poly.sub(&other.poly),
        })
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.k, other.k, "ambient dimension");
        HomogeneousPoly {
            k: self.k,
            degree: self.degree + other.degree,
            poly: self.poly.mul(&other.poly),
        }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        HomogeneousPoly {
            k: self.k,
            degree: self.degree,
            poly: self.poly.scale(s),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        HomogeneousPoly {
            k: self.k,
            degree: self.degree * e,
            poly: self.poly.pow(e),
        }
    }

    pub fn derivative(&self, j: usize) -> Self {
        HomogeneousPoly {
            k: self.k,
            degree: self.degree.saturating_sub(1),
            poly: self.poly.derivative(j),
        }
    }

    /// Exact quotient by a divisor known to divide `self`.
    pub fn div_exact(&self, g: &HomogeneousPoly) -> Option<Self> {
        let q = self.poly.div_exact(&g.poly)?;
        Some(HomogeneousPoly {
            k: self.k,
            degree: self.degree.checked_sub(g.degree)?,
            poly: q,
        })
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.k != other.k {
            return Err(Error::DimensionMismatch {
                expected: self.k + 1,
                got: other.k + 1,
            });
        }
        if self.degree != other.degree && !self.is_zero() && !other.is_zero() {
            return Err(Error::NotHomogeneous(self.degree));
        }
        Ok(())
    }
}

/// A polynomial with coefficients pre-converted to `T`, for repeated
/// floating evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly<T> {
    terms: Vec<(T, SmallVec<[u32; 4]>)>,
    max_exp: Vec<u32>,
    prec: u32,
}

impl<T: Real> CompiledPoly<T> {
    pub fn new(p: &HomogeneousPoly, precision: Precision) -> Self {
        let prec = precision.bits();
        let n = p.k + 1;
        let terms = p.poly.terms().map(|(m, c)| (T::from_ratio(c, prec), m.0.clone())).collect();
        let max_exp = (0..n).map(|j| p.poly.degree_in(j)).collect();
        CompiledPoly { terms, max_exp, prec }
    }

    pub fn max_exp(&self) -> &[u32] {
        &self.max_exp
    }

    pub fn eval(&self, z: &[Cx<T>]) -> Cx<T> {
        let table = power_table(z, &self.max_exp, self.prec);
        self.eval_with(&table)
    }

    /// Evaluate using a precomputed table `table[j][e] = z_j^e`.
    pub fn eval_with(&self, table: &[Vec<Cx<T>>]) -> Cx<T> {
        let mut acc = Cx::zero(self.prec);
        for (c, e) in &self.terms {
            let mut t: Option<Cx<T>> = None;
            for (j, &ej) in e.iter().enumerate() {
                if ej == 0 {
                    continue;
                }
                let f = &table[j][ej as usize];
                t = Some(match t {
                    None => f.clone(),
                    Some(v) => v.mul(f),
                });
            }
            let term = match t {
                None => Cx::new(c.clone(), T::zero(self.prec)),
                Some(v) => v.scale(c),
            };
            acc = acc.add(&term);
        }
        acc
    }
}

/// `table[j][e] = z_j^e` for `e <= max_exp[j]`.
pub fn power_table<T: Real>(z: &[Cx<T>], max_exp: &[u32], prec: u32) -> Vec<Vec<Cx<T>>> {
    z.iter()
        .zip(max_exp)
        .map(|(x, &m)| {
            let mut row = Vec::with_capacity(m as usize + 1);
            row.push(Cx::one(prec));
            for e in 1..=m as usize {
                let next = row[e - 1].mul(x);
                row.push(next);
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn monomial_at_basis_point() {
        let p = HomogeneousPoly::from_terms(2, 2, &[(&[2, 0, 0], 1)]).unwrap();
        assert_eq!(p.eval_exact(&[q(1), q(0), q(0)]).unwrap(), q(1));
    }

    #[test]
    fn symmetric_quadric_vanishes_on_diagonal() {
        let p = HomogeneousPoly::from_terms(2, 2, &[(&[1, 1, 0], 1), (&[0, 0, 2], -1)]).unwrap();
        assert_eq!(p.eval_exact(&[q(1), q(1), q(1)]).unwrap(), q(0));
    }

    #[test]
    fn rejects_inhomogeneous_terms() {
        let r = HomogeneousPoly::from_terms(1, 2, &[(&[2, 0], 1), (&[1, 0], 1)]);
        assert!(matches!(r, Err(Error::NotHomogeneous(2))));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = HomogeneousPoly::var(2, 0);
        assert!(matches!(p.eval_exact(&[q(1)]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn float_eval_of_square_at_one_plus_i() {
        let p = HomogeneousPoly::from_terms(1, 2, &[(&[2, 0], 1)]).unwrap();
        let z = [Cx::<f64>::from_c64(Complex64::new(1.0, 1.0), 53), Cx::zero(53)];
        let v = p.eval_float(&z, Precision::DOUBLE).unwrap();
        assert_eq!(v.to_c64(), Complex64::new(0.0, 2.0));
    }

    #[test]
    fn float_eval_of_identity_component() {
        let p = HomogeneousPoly::var(2, 0);
        let z = [Cx::<f64>::new(0.5, 0.0), Cx::zero(53), Cx::zero(53)];
        assert_eq!(p.eval_float(&z, Precision::DOUBLE).unwrap().re, 0.5);
    }
}
