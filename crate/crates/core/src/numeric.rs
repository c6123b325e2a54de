//! Floating-point scalars at selectable precision.
//!
//! Everything that iterates orbits or evaluates lifts is written against the
//! [`Real`] trait so the same code runs on `f64` (53 bits) and on MPFR floats
//! of any width. [`Precision`] picks the backend at the call site.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rug::Float;

/// Working precision in bits. 53 selects native `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Precision(pub u32);

impl Precision {
    pub const DOUBLE: Precision = Precision(53);

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn is_double(self) -> bool {
        self.0 <= 53
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::DOUBLE
    }
}

/// Real scalar used by the generic evaluation paths.
pub trait Real:
    Clone + Debug + Send + Sync + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn from_f64(x: f64, prec: u32) -> Self;
    fn from_ratio(q: &BigRational, prec: u32) -> Self;
    fn to_f64(&self) -> f64;
    fn prec(&self) -> u32;
    fn sqrt(&self) -> Self;
    /// Natural logarithm; `-inf` at zero.
    fn ln(&self) -> Self;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;

    fn zero(prec: u32) -> Self {
        Self::from_f64(0.0, prec)
    }

    fn one(prec: u32) -> Self {
        Self::from_f64(1.0, prec)
    }
}

impl Real for f64 {
    fn from_f64(x: f64, _prec: u32) -> Self {
        x
    }

    fn from_ratio(q: &BigRational, _prec: u32) -> Self {
        q.to_f64().unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn prec(&self) -> u32 {
        53
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    fn ln(&self) -> Self {
        f64::ln(*self)
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

/// MPFR float; binary operations round to the wider operand precision.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct Mp(pub Float);

impl Mp {
    pub fn new(prec: u32, x: f64) -> Self {
        Mp(Float::with_val(prec, x))
    }

    fn wide(&self, other: &Mp) -> u32 {
        self.0.prec().max(other.0.prec())
    }
}

fn to_rug(n: &BigInt) -> rug::Integer {
    rug::Integer::from_str_radix(&n.to_str_radix(16), 16).expect("hex digits parse")
}

impl Real for Mp {
    fn from_f64(x: f64, prec: u32) -> Self {
        Mp(Float::with_val(prec.max(53), x))
    }

    fn from_ratio(q: &BigRational, prec: u32) -> Self {
        let r = rug::Rational::from((to_rug(q.numer()), to_rug(q.denom())));
        Mp(Float::with_val(prec.max(53), &r))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    fn prec(&self) -> u32 {
        self.0.prec()
    }

    fn sqrt(&self) -> Self {
        Mp(self.0.clone().sqrt())
    }

    fn ln(&self) -> Self {
        Mp(self.0.clone().ln())
    }

    fn abs(&self) -> Self {
        Mp(self.0.clone().abs())
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

macro_rules! mp_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for Mp {
            type Output = Mp;
            fn $method(self, rhs: Mp) -> Mp {
                let p = self.wide(&rhs);
                Mp(Float::with_val(p, &self.0 $op &rhs.0))
            }
        }
    };
}

mp_binop!(Add, add, +);
mp_binop!(Sub, sub, -);
mp_binop!(Mul, mul, *);
mp_binop!(Div, div, /);

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(-self.0)
    }
}

/// Complex number over a [`Real`].
#[derive(Clone, Debug, PartialEq)]
pub struct Cx<T> {
    pub re: T,
    pub im: T,
}

impl<T: Real> Cx<T> {
    pub fn new(re: T, im: T) -> Self {
        Cx { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        Cx::new(T::zero(prec), T::zero(prec))
    }

    pub fn one(prec: u32) -> Self {
        Cx::new(T::one(prec), T::zero(prec))
    }

    pub fn from_c64(z: num_complex::Complex64, prec: u32) -> Self {
        Cx::new(T::from_f64(z.re, prec), T::from_f64(z.im, prec))
    }

    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn norm_sqr(&self) -> T {
        self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone()
    }

    pub fn conj(&self) -> Self {
        Cx::new(self.re.clone(), -self.im.clone())
    }

    pub fn scale(&self, s: &T) -> Self {
        Cx::new(self.re.clone() * s.clone(), self.im.clone() * s.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        Cx::new(self.re.clone() + o.re.clone(), self.im.clone() + o.im.clone())
    }

    pub fn sub(&self, o: &Self) -> Self {
        Cx::new(self.re.clone() - o.re.clone(), self.im.clone() - o.im.clone())
    }

    pub fn mul(&self, o: &Self) -> Self {
        Cx::new(
            self.re.clone() * o.re.clone() - self.im.clone() * o.im.clone(),
            self.re.clone() * o.im.clone() + self.im.clone() * o.re.clone(),
        )
    }

    /// `conj(self) * o`, the Hermitian product term.
    pub fn conj_mul(&self, o: &Self) -> Self {
        Cx::new(
            self.re.clone() * o.re.clone() + self.im.clone() * o.im.clone(),
            self.re.clone() * o.im.clone() - self.im.clone() * o.re.clone(),
        )
    }
}

/// Hermitian norm of a vector.
pub fn vec_norm<T: Real>(z: &[Cx<T>]) -> T {
    let prec = z.first().map(|c| c.re.prec()).unwrap_or(53);
    z.iter().fold(T::zero(prec), |acc, c| acc + c.norm_sqr()).sqrt()
}

/// Hermitian inner product `<u, v> = sum conj(u_i) v_i`.
pub fn inner<T: Real>(u: &[Cx<T>], v: &[Cx<T>]) -> Cx<T> {
    let prec = u.first().map(|c| c.re.prec()).unwrap_or(53);
    u.iter().zip(v).fold(Cx::zero(prec), |acc, (a, b)| acc.add(&a.conj_mul(b)))
}

/// Complex64 coordinates to `Cx<T>` at the given precision.
pub fn to_cx<T: Real>(z: &[num_complex::Complex64], prec: u32) -> Vec<Cx<T>> {
    z.iter().map(|c| Cx::from_c64(*c, prec)).collect()
}

pub fn to_c64<T: Real>(z: &[Cx<T>]) -> Vec<num_complex::Complex64> {
    z.iter().map(Cx::to_c64).collect()
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    q.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn mp_rational_conversion_is_correctly_rounded() {
        let q = BigRational::new(BigInt::from(1), BigInt::from(3));
        let x = Mp::from_ratio(&q, 200);
        let three = Mp::from_f64(3.0, 200);
        let back = x * three - Mp::one(200);
        assert!(back.abs().to_f64() < 1e-59);
    }

    #[test]
    fn precision_is_max_of_operands() {
        let a = Mp::from_f64(1.0, 64);
        let b = Mp::from_f64(1.0, 256);
        assert_eq!((a + b).prec(), 256);
    }

    #[test]
    fn complex_mul_matches_f64() {
        let a = Cx::<f64>::new(1.0, 2.0);
        let b = Cx::<f64>::new(-3.0, 0.5);
        let c = a.mul(&b);
        assert_eq!(c.re, -3.0 - 1.0);
        assert_eq!(c.im, 0.5 - 6.0);
    }
}
