use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

/// Exponent vector, ordered graded-lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(pub SmallVec<[u32; 4]>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(SmallVec::from_elem(0, nvars))
    }

    pub fn var(nvars: usize, j: usize) -> Self {
        let mut m = Self::one(nvars);
        m.0[j] = 1;
        m
    }

    pub fn from_slice(e: &[u32]) -> Self {
        Monomial(SmallVec::from_slice(e))
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = SmallVec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            if a < b {
                return None;
            }
            out.push(a - b);
        }
        Some(Monomial(out))
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.as_slice().cmp(other.0.as_slice()))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse multivariate polynomial over Q. No homogeneity assumed; this is
/// the arithmetic engine behind [`super::HomogeneousPoly`] and the gcd code.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SparsePoly {
    nvars: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl SparsePoly {
    pub fn zero(nvars: usize) -> Self {
        SparsePoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(nvars), c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigRational::one())
    }

    pub fn var(nvars: usize, j: usize) -> Self {
        Self::term(Monomial::var(nvars, j), BigRational::one())
    }

    pub fn term(m: Monomial, c: BigRational) -> Self {
        let mut p = Self::zero(m.nvars());
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, BigRational)>) -> Self {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            assert_eq!(m.nvars(), nvars, "monomial arity");
            p.add_term(m, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> + ExactSizeIterator {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.keys().next().unwrap().total_degree() == 0)
    }

    pub fn coeff(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Largest monomial in graded-lex order with its coefficient.
    pub fn leading_term(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::total_degree).max()
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    pub fn is_homogeneous_of(&self, degree: u32) -> bool {
        self.terms.keys().all(|m| m.total_degree() == degree)
    }

    pub fn neg(&self) -> Self {
        SparsePoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        if s.is_zero() {
            return Self::zero(self.nvars);
        }
        SparsePoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn mul_term(&self, m: &Monomial, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        SparsePoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(a, b)| (a.mul(m), b * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.nvars, other.nvars);
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.nvars);
        }
        if other.len() == 1 {
            let (m, c) = other.terms.iter().next().unwrap();
            return self.mul_term(m, c);
        }
        if self.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            return other.mul_term(m, c);
        }
        let mut acc: HashMap<Monomial, BigRational> = HashMap::with_capacity(self.len() * 2);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let prod = ca * cb;
                acc.entry(ma.mul(mb)).and_modify(|c| *c += &prod).or_insert(prod);
            }
        }
        SparsePoly {
            nvars: self.nvars,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut result = Self::one(self.nvars);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[var] = e - 1;
            out.add_term(dm, c * BigRational::from_integer(BigInt::from(e)));
        }
        out
    }

    pub fn eval_exact(&self, z: &[BigRational]) -> BigRational {
        debug_assert_eq!(z.len(), self.nvars);
        let max_e: Vec<u32> = (0..self.nvars).map(|j| self.degree_in(j)).collect();
        let powers: Vec<Vec<BigRational>> = z
            .iter()
            .zip(&max_e)
            .map(|(x, &e)| {
                let mut row = Vec::with_capacity(e as usize + 1);
                row.push(BigRational::one());
                for i in 1..=e as usize {
                    let next = &row[i - 1] * x;
                    row.push(next);
                }
                row
            })
            .collect();
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (j, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t *= &powers[j][e as usize];
                }
            }
            acc += t;
        }
        acc
    }

    /// Substitute `g[j]` for variable `j`.
    pub fn substitute(&self, g: &[SparsePoly]) -> SparsePoly {
        assert_eq!(g.len(), self.nvars);
        let out_vars = g.first().map(|p| p.nvars).unwrap_or(0);
        let mut cache: HashMap<(usize, u32), SparsePoly> = HashMap::new();
        let mut out = SparsePoly::zero(out_vars);
        for (m, c) in &self.terms {
            let mut t = SparsePoly::constant(out_vars, c.clone());
            for (j, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let p = cache.entry((j, e)).or_insert_with(|| g[j].pow(e)).clone();
                t = t.mul(&p);
            }
            out = out.add(&t);
        }
        out
    }

    /// Exact quotient `self / divisor`, `None` if the division leaves a remainder.
    pub fn div_exact(&self, divisor: &SparsePoly) -> Option<SparsePoly> {
        if divisor.is_zero() {
            return None;
        }
        let (lm, lc) = divisor.leading_term().map(|(m, c)| (m.clone(), c.clone()))?;
        if divisor.len() == 1 {
            let inv = lc.recip();
            let mut out = SparsePoly::zero(self.nvars);
            for (m, c) in &self.terms {
                out.terms.insert(m.div(&lm)?, c * &inv);
            }
            return Some(out);
        }
        let mut rem = self.clone();
        let mut quot = SparsePoly::zero(self.nvars);
        while let Some((rm, rc)) = rem.leading_term().map(|(m, c)| (m.clone(), c.clone())) {
            let qm = rm.div(&lm)?;
            let qc = rc / &lc;
            rem = rem.sub(&divisor.mul_term(&qm, &qc));
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    /// Coefficients with respect to `var`: entry `i` multiplies `var^i`.
    pub fn to_univariate(&self, var: usize) -> Vec<SparsePoly> {
        let deg = self.degree_in(var) as usize;
        let mut out = vec![SparsePoly::zero(self.nvars); deg + 1];
        for (m, c) in &self.terms {
            let e = m.0[var] as usize;
            let mut mm = m.clone();
            mm.0[var] = 0;
            out[e].terms.insert(mm, c.clone());
        }
        out
    }

    /// Monomial gcd of all terms.
    pub fn monomial_content(&self) -> Option<Monomial> {
        let mut it = self.terms.keys();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, m| acc.gcd(m)))
    }

    /// Scale so the leading coefficient is one.
    pub fn monic(&self) -> Self {
        match self.leading_term() {
            Some((_, c)) => self.scale(&c.recip()),
            None => self.clone(),
        }
    }

    /// Clear denominators and remove the integer content, keeping the sign
    /// of the leading coefficient positive. Returns the scalar applied.
    pub fn primitive_integer(&self) -> (Self, BigRational) {
        if self.is_zero() {
            return (self.clone(), BigRational::one());
        }
        let mut den = BigInt::one();
        for c in self.terms.values() {
            den = num_integer::Integer::lcm(&den, c.denom());
        }
        let mut content = BigInt::zero();
        for c in self.terms.values() {
            let n = c.numer() * (&den / c.denom());
            content = num_integer::Integer::gcd(&content, &n);
        }
        let lead_neg = self.leading_term().map(|(_, c)| c.is_negative()).unwrap_or(false);
        if lead_neg {
            content = -content;
        }
        let s = BigRational::new(den, content);
        (self.scale(&s), s)
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", c)?;
            for (j, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*z{}", j)?,
                    _ => write!(f, "*z{}^{}", j, e)?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn grlex_orders_by_degree_then_lex() {
        let a = Monomial::from_slice(&[2, 0, 0]);
        let b = Monomial::from_slice(&[1, 1, 0]);
        let c = Monomial::from_slice(&[0, 0, 3]);
        assert!(a > b);
        assert!(c > a);
    }

    #[test]
    fn exact_division_recovers_factor() {
        let x = SparsePoly::var(2, 0);
        let y = SparsePoly::var(2, 1);
        let a = x.add(&y);
        let b = x.sub(&y.scale(&q(3)));
        let prod = a.mul(&b);
        assert_eq!(prod.div_exact(&a).unwrap(), b);
        assert!(prod.div_exact(&x).is_none());
    }

    #[test]
    fn derivative_of_power() {
        let x = SparsePoly::var(1, 0);
        let p = x.pow(5);
        assert_eq!(p.derivative(0), x.pow(4).scale(&q(5)));
    }

    #[test]
    fn primitive_integer_clears_denominators() {
        let x = SparsePoly::var(2, 0);
        let y = SparsePoly::var(2, 1);
        let p = x
            .scale(&BigRational::new(BigInt::from(3), BigInt::from(4)))
            .add(&y.scale(&BigRational::new(BigInt::from(-9), BigInt::from(2))));
        let (pp, _) = p.primitive_integer();
        assert_eq!(pp, x.add(&y.scale(&q(-6))));
    }
}
