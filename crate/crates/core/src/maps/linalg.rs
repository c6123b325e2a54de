use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Exact square matrix, row-major.
pub type RatMatrix = Vec<Vec<BigRational>>;

pub fn mat_identity(n: usize) -> RatMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect()
}

pub fn mat_from_ints(rows: &[&[i64]]) -> RatMatrix {
    rows.iter()
        .map(|r| r.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect())
        .collect()
}

pub fn mat_mul_vec(a: &RatMatrix, v: &[BigRational]) -> Vec<BigRational> {
    a.iter()
        .map(|row| row.iter().zip(v).fold(BigRational::zero(), |acc, (x, y)| acc + x * y))
        .collect()
}

/// Gauss–Jordan inverse over Q.
pub fn mat_inverse(a: &RatMatrix) -> Result<RatMatrix> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.iter().map(Vec::len).find(|&l| l != n).unwrap_or(n),
        });
    }
    let mut m: Vec<Vec<BigRational>> = a.iter().zip(mat_identity(n)).map(|(r, e)| r.iter().cloned().chain(e).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero()).ok_or(Error::SingularMatrix)?;
        m.swap(col, pivot);
        let inv = m[col][col].recip();
        for x in m[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let (pr, rr) = if r < col {
                    let (lo, hi) = m.split_at_mut(col);
                    (&hi[0], &mut lo[r])
                } else {
                    let (lo, hi) = m.split_at_mut(r);
                    (&lo[col], &mut hi[0])
                };
                for (x, p) in rr.iter_mut().zip(pr.iter()) {
                    *x -= &f * p;
                }
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = mat_from_ints(&[&[1, 1, 0], &[0, 1, 0], &[1, 0, 1]]);
        let inv = mat_inverse(&a).unwrap();
        for j in 0..3 {
            let col: Vec<BigRational> = inv.iter().map(|r| r[j].clone()).collect();
            let e = mat_mul_vec(&a, &col);
            for (i, x) in e.iter().enumerate() {
                assert_eq!(*x, if i == j { BigRational::one() } else { BigRational::zero() });
            }
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = mat_from_ints(&[&[1, 2], &[2, 4]]);
        assert!(matches!(mat_inverse(&a), Err(Error::SingularMatrix)));
    }
}
