use num_rational::BigRational;
use num_traits::One;

use super::gcd::gcd_homogeneous;
use super::homogeneous::{power_table, CompiledPoly, HomogeneousPoly};
use super::sparse::SparsePoly;
use crate::error::{Error, Result};
use crate::numeric::{Cx, Precision, Real};

/// Default cap on terms per component during symbolic iteration.
pub const DEFAULT_TERM_CAP: usize = 4096;

/// k+1 homogeneous components of a common degree: a lift of a map of P^k.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolyVector {
    components: Vec<HomogeneousPoly>,
}

impl PolyVector {
    pub fn new(components: Vec<HomogeneousPoly>) -> Result<Self> {
        let first = components.first().ok_or(Error::ZeroMap)?;
        let (k, d) = (first.k(), first.degree());
        if components.len() != k + 1 {
            return Err(Error::DimensionMismatch {
                expected: k + 1,
                got: components.len(),
            });
        }
        for c in &components {
            if c.k() != k {
                return Err(Error::DimensionMismatch {
                    expected: k + 1,
                    got: c.k() + 1,
                });
            }
            if c.degree() != d {
                return Err(Error::NotHomogeneous(d));
            }
        }
        Ok(PolyVector { components })
    }

    pub fn identity(k: usize) -> Self {
        PolyVector {
            components: (0..=k).map(|j| HomogeneousPoly::var(k, j)).collect(),
        }
    }

    /// Linear map `Z -> M Z` for an exact square matrix.
    pub fn linear(m: &[Vec<BigRational>]) -> Result<Self> {
        let n = m.len();
        if n == 0 {
            return Err(Error::ZeroMap);
        }
        let k = n - 1;
        let mut comps = Vec::with_capacity(n);
        for row in m {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            let mut p = SparsePoly::zero(n);
            for (j, c) in row.iter().enumerate() {
                p = p.add(&SparsePoly::var(n, j).scale(c));
            }
            comps.push(HomogeneousPoly::new(k, 1, p)?);
        }
        PolyVector::new(comps)
    }

    pub fn k(&self) -> usize {
        self.components[0].k()
    }

    pub fn degree(&self) -> u32 {
        self.components[0].degree()
    }

    pub fn components(&self) -> &[HomogeneousPoly] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(HomogeneousPoly::is_zero)
    }

    pub fn max_terms(&self) -> usize {
        self.components.iter().map(HomogeneousPoly::term_count).max().unwrap_or(0)
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        PolyVector {
            components: self.components.iter().map(|c| c.scale(s)).collect(),
        }
    }

    pub fn mul_poly(&self, g: &HomogeneousPoly) -> Self {
        PolyVector {
            components: self.components.iter().map(|c| c.mul(g)).collect(),
        }
    }

    /// `F(G)`: components `F_i(G_0, ..., G_k)`, degree `deg F * deg G`.
    pub fn compose(&self, g: &PolyVector) -> Result<PolyVector> {
        self.compose_capped(g, usize::MAX)
    }

    pub fn compose_capped(&self, g: &PolyVector, cap: usize) -> Result<PolyVector> {
        if self.k() != g.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k() + 1,
                got: g.k() + 1,
            });
        }
        let k = self.k();
        let degree = self.degree() * g.degree();
        let inner: Vec<SparsePoly> = g.components.iter().map(|c| c.sparse().clone()).collect();
        let mut out = Vec::with_capacity(k + 1);
        for f in &self.components {
            let p = f.sparse().substitute(&inner);
            if p.len() > cap {
                return Err(Error::TermCapExceeded { terms: p.len(), cap });
            }
            out.push(HomogeneousPoly::new(k, degree, p)?);
        }
        PolyVector::new(out)
    }

    /// Removes the common factor: returns `(F', g)` with `F = g F'` and the
    /// components of `F'` coprime. `g` is monic in graded-lex order.
    pub fn gcd_reduce(&self) -> Result<(PolyVector, HomogeneousPoly)> {
        if self.is_zero() {
            return Err(Error::ZeroMap);
        }
        let k = self.k();
        let polys: Vec<SparsePoly> = self.components.iter().map(|c| c.sparse().clone()).collect();
        let g = gcd_homogeneous(&polys);
        let g = HomogeneousPoly::from_sparse(k, g, 0)?;
        if g.degree() == 0 {
            let one = HomogeneousPoly::constant(k, BigRational::one());
            return Ok((self.clone(), one));
        }
        let reduced_degree = self.degree() - g.degree();
        let comps = self
            .components
            .iter()
            .map(|c| match c.div_exact(&g) {
                Some(q) => Ok(q),
                None if c.is_zero() => Ok(HomogeneousPoly::zero(k, reduced_degree)),
                None => Err(Error::invalid("gcd does not divide a component")),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((PolyVector::new(comps)?, g))
    }

    /// Jacobian entries `(i, j) = dF_i/dz_j`.
    pub fn partial_derivatives(&self) -> Vec<Vec<HomogeneousPoly>> {
        let n = self.k() + 1;
        self.components
            .iter()
            .map(|c| (0..n).map(|j| fix_degree(c.derivative(j), self.degree().saturating_sub(1))).collect())
            .collect()
    }

    pub fn eval_exact(&self, z: &[BigRational]) -> Result<Vec<BigRational>> {
        self.components.iter().map(|c| c.eval_exact(z)).collect()
    }

    pub fn compile<T: Real>(&self, precision: Precision) -> CompiledVector<T> {
        CompiledVector::new(self, precision)
    }
}

fn fix_degree(p: HomogeneousPoly, degree: u32) -> HomogeneousPoly {
    if p.is_zero() && p.degree() != degree {
        HomogeneousPoly::zero(p.k(), degree)
    } else {
        p
    }
}

/// A lift and its Jacobian with coefficients converted to `T`, sharing one
/// power table per evaluation point.
#[derive(Clone, Debug)]
pub struct CompiledVector<T> {
    comps: Vec<CompiledPoly<T>>,
    jac: Vec<Vec<CompiledPoly<T>>>,
    max_exp: Vec<u32>,
    prec: u32,
    degree: u32,
}

impl<T: Real> CompiledVector<T> {
    pub fn new(f: &PolyVector, precision: Precision) -> Self {
        let comps: Vec<CompiledPoly<T>> = f.components.iter().map(|c| CompiledPoly::new(c, precision)).collect();
        let jac: Vec<Vec<CompiledPoly<T>>> = f
            .partial_derivatives()
            .iter()
            .map(|row| row.iter().map(|p| CompiledPoly::new(p, precision)).collect())
            .collect();
        let n = f.k() + 1;
        let max_exp = (0..n).map(|j| comps.iter().map(|c| c.max_exp()[j]).max().unwrap_or(0)).collect();
        CompiledVector {
            comps,
            jac,
            max_exp,
            prec: precision.bits(),
            degree: f.degree(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn eval(&self, z: &[Cx<T>]) -> Vec<Cx<T>> {
        let table = power_table(z, &self.max_exp, self.prec);
        self.comps.iter().map(|c| c.eval_with(&table)).collect()
    }

    /// Values and Jacobian at `z`.
    pub fn eval_with_jacobian(&self, z: &[Cx<T>]) -> (Vec<Cx<T>>, Vec<Vec<Cx<T>>>) {
        let table = power_table(z, &self.max_exp, self.prec);
        let v = self.comps.iter().map(|c| c.eval_with(&table)).collect();
        let j = self.jac.iter().map(|row| row.iter().map(|c| c.eval_with(&table)).collect()).collect();
        (v, j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn cremona() -> PolyVector {
        PolyVector::new(vec![
            HomogeneousPoly::from_terms(2, 2, &[(&[0, 1, 1], 1)]).unwrap(),
            HomogeneousPoly::from_terms(2, 2, &[(&[1, 0, 1], 1)]).unwrap(),
            HomogeneousPoly::from_terms(2, 2, &[(&[1, 1, 0], 1)]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn identity_is_left_neutral() {
        let f = cremona();
        assert_eq!(PolyVector::identity(2).compose(&f).unwrap(), f);
    }

    #[test]
    fn cremona_square_expands_and_reduces() {
        let f = cremona();
        let f2 = f.compose(&f).unwrap();
        assert_eq!(f2.degree(), 4);
        let expect = PolyVector::new(vec![
            HomogeneousPoly::from_terms(2, 4, &[(&[2, 1, 1], 1)]).unwrap(),
            HomogeneousPoly::from_terms(2, 4, &[(&[1, 2, 1], 1)]).unwrap(),
            HomogeneousPoly::from_terms(2, 4, &[(&[1, 1, 2], 1)]).unwrap(),
        ])
        .unwrap();
        assert_eq!(f2, expect);
        let (r, g) = f2.gcd_reduce().unwrap();
        assert_eq!(r, PolyVector::identity(2));
        assert_eq!(g, HomogeneousPoly::from_terms(2, 3, &[(&[1, 1, 1], 1)]).unwrap());
    }

    #[test]
    fn zero_map_is_rejected() {
        let z = PolyVector::new(vec![HomogeneousPoly::zero(1, 2), HomogeneousPoly::zero(1, 2)]).unwrap();
        assert!(matches!(z.gcd_reduce(), Err(Error::ZeroMap)));
    }

    #[test]
    fn identity_jacobian_is_identity() {
        let d = PolyVector::identity(2).partial_derivatives();
        for (i, row) in d.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                let want = if i == j { 1 } else { 0 };
                let v = p.eval_exact(&vec![BigRational::one(); 3]).unwrap();
                assert_eq!(v, BigRational::from_integer(BigInt::from(want)));
            }
        }
    }

    #[test]
    fn term_cap_is_enforced() {
        let f = cremona();
        let r = f.compose_capped(&f, 0);
        assert!(matches!(r, Err(Error::TermCapExceeded { cap: 0, .. })));
    }
}
