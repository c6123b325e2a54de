use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::maps::RationalMap;
use crate::numeric::{to_c64, to_cx, vec_norm, Cx, Precision, Real};
use crate::poly::CompiledVector;

/// Values of `u = (2/d) log|F(Z)|` below this are treated as `-inf`.
pub const SENTINEL: f64 = -1e6;

/// One step of the renormalized orbit with its differential.
#[derive(Clone, Debug)]
pub struct Step<T> {
    /// `F(Z)/|F(Z)|`.
    pub image: Vec<Cx<T>>,
    /// `k x k` differential in the frames of `Z` and of the image.
    pub d: Vec<Vec<Cx<T>>>,
    pub norm_f: T,
}

/// Orthonormal frame of the complement of a unit vector `z`: Gram–Schmidt
/// on `z` followed by the standard basis vectors other than the one at the
/// largest coordinate of `z`.
pub fn frame<T: Real>(z: &[Cx<T>]) -> Vec<Vec<Cx<T>>> {
    let n = z.len();
    let prec = z[0].re.prec();
    let mut big = 0;
    for i in 1..n {
        if z[i].norm_sqr() > z[big].norm_sqr() {
            big = i;
        }
    }
    let mut basis: Vec<Vec<Cx<T>>> = vec![z.to_vec()];
    for j in (0..n).filter(|&j| j != big) {
        let mut w: Vec<Cx<T>> = (0..n).map(|i| if i == j { Cx::one(prec) } else { Cx::zero(prec) }).collect();
        for _ in 0..2 {
            for u in &basis {
                let c = crate::numeric::inner(u, &w);
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi = wi.sub(&ui.mul(&c));
                }
            }
        }
        let nw = vec_norm(&w);
        let inv = T::one(prec) / nw;
        basis.push(w.iter().map(|c| c.scale(&inv)).collect());
    }
    basis.remove(0);
    basis
}

/// `u(Z) = (2/d) log|F(Z)|` for a unit `Z`; `-inf` below the sentinel.
pub fn u_from_norm<T: Real>(norm_f: &T, degree: u32) -> f64 {
    if norm_f.is_zero() {
        return f64::NEG_INFINITY;
    }
    let u = 2.0 * norm_f.ln().to_f64() / degree as f64;
    if u < SENTINEL {
        f64::NEG_INFINITY
    } else {
        u
    }
}

/// Image and differential at a unit point; `None` on the indeterminacy
/// locus (or below the sentinel).
pub fn step<T: Real>(cv: &CompiledVector<T>, z: &[Cx<T>]) -> Option<Step<T>> {
    let (v, jac) = cv.eval_with_jacobian(z);
    let norm_f = vec_norm(&v);
    if !u_from_norm(&norm_f, cv.degree()).is_finite() {
        return None;
    }
    let prec = cv.prec();
    let inv = T::one(prec) / norm_f.clone();
    let image: Vec<Cx<T>> = v.iter().map(|c| c.scale(&inv)).collect();
    let e_in = frame(z);
    let e_out = frame(&image);
    let n = z.len();
    // J * E_in, column by column.
    let je: Vec<Vec<Cx<T>>> = e_in
        .iter()
        .map(|col| {
            (0..n)
                .map(|i| {
                    let mut acc = Cx::zero(prec);
                    for j in 0..n {
                        acc = acc.add(&jac[i][j].mul(&col[j]));
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let d: Vec<Vec<Cx<T>>> = e_out
        .iter()
        .map(|row| je.iter().map(|col| crate::numeric::inner(row, col).scale(&inv)).collect())
        .collect();
    Some(Step { image, d, norm_f })
}

pub fn mat_mul<T: Real>(a: &[Vec<Cx<T>>], b: &[Vec<Cx<T>>]) -> Vec<Vec<Cx<T>>> {
    let n = a.len();
    let m = b[0].len();
    let inner = b.len();
    let prec = a[0][0].re.prec();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut acc = Cx::zero(prec);
                    for t in 0..inner {
                        acc = acc.add(&a[i][t].mul(&b[t][j]));
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn to_dmatrix<T: Real>(m: &[Vec<Cx<T>>]) -> DMatrix<Complex64> {
    let r = m.len();
    let c = if r == 0 { 0 } else { m[0].len() };
    DMatrix::from_fn(r, c, |i, j| m[i][j].to_c64())
}

/// Squared singular values, descending.
pub fn singular_values_sq(d: &DMatrix<Complex64>) -> Vec<f64> {
    if d.nrows() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = d.clone().svd(false, false).singular_values.iter().map(|x| x * x).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Elementary symmetric polynomial `e_q(a)`.
pub fn elementary_symmetric(a: &[f64], q: usize) -> f64 {
    let mut e = vec![0.0; q + 1];
    e[0] = 1.0;
    for &x in a {
        for j in (1..=q.min(a.len())).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e[q]
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Projective differential of `f` at a unit point, in orthonormal frames
/// of `Z^⊥` and `F(Z)^⊥`, divided by `|F(Z)|`.
#[derive(Clone, Debug)]
pub struct ProjectiveDifferential {
    pub z: Point,
    pub image: Point,
    pub d: DMatrix<Complex64>,
    pub singular_values_sq: Vec<f64>,
    pub norm_f: f64,
}

pub fn projective_differential(f: &RationalMap, z: &[Complex64], precision: Precision) -> Result<ProjectiveDifferential> {
    if z.len() != f.k() + 1 {
        return Err(Error::DimensionMismatch {
            expected: f.k() + 1,
            got: z.len(),
        });
    }
    let z = crate::geometry::normalize(z).ok_or(Error::invalid("zero vector"))?;
    if precision.is_double() {
        let cv: CompiledVector<f64> = f.lift().compile(precision);
        differential_from(&cv, &z)
    } else {
        let cv: CompiledVector<crate::numeric::Mp> = f.lift().compile(precision);
        differential_from(&cv, &z)
    }
}

pub fn differential_from<T: Real>(cv: &CompiledVector<T>, z: &[Complex64]) -> Result<ProjectiveDifferential> {
    let zc = to_cx::<T>(z, cv.prec());
    let s = step(cv, &zc).ok_or(Error::AtIndeterminacy)?;
    let d = to_dmatrix(&s.d);
    Ok(ProjectiveDifferential {
        z: z.to_vec(),
        image: to_c64(&s.image),
        singular_values_sq: singular_values_sq(&d),
        d,
        norm_f: s.norm_f.to_f64(),
    })
}

type CxMatrix<T> = Vec<Vec<Cx<T>>>;

/// Chained differential of `f^n` at `z`, with the final image.
pub fn chained<T: Real>(cv: &CompiledVector<T>, z: &[Cx<T>], n: usize) -> Option<(Vec<Cx<T>>, CxMatrix<T>)> {
    let k = z.len() - 1;
    let prec = cv.prec();
    let mut acc: Vec<Vec<Cx<T>>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { Cx::one(prec) } else { Cx::zero(prec) }).collect())
        .collect();
    let mut cur = z.to_vec();
    for _ in 0..n {
        let s = step(cv, &cur)?;
        acc = mat_mul(&s.d, &acc);
        cur = s.image;
    }
    Some((cur, acc))
}
