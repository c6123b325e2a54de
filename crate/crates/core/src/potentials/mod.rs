//! Quasi-potentials `u = (1/d) log|F|^2 - log|Z|^2`, Green-potential partial
//! sums and the log-distance proxy to the forward indeterminacy set.

mod hypothesis;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fs_uniform, normalize, Point};
use crate::maps::{IndeterminacyData, RationalMap};
use crate::measures::{u_from_norm, SENTINEL};
use crate::numeric::{to_c64, to_cx, vec_norm, Mp, Precision, Real};
use crate::poly::CompiledVector;
use crate::stream::par_indexed;

pub use hypothesis::{
    fit_ratio, hypothesis_strong_series, hypothesis_weak_integral, hypothesis_weak_integral_backward, verdict_for, DistanceEstimator, HypothesisKind,
    HypothesisReport, StrongSeriesReport, Verdict, WeakTerm,
};

/// `u(Z)` for any nonzero representative `Z`; `-inf` at (or numerically
/// at) the indeterminacy set.
pub fn quasi_potential_u(f: &RationalMap, z: &[Complex64], precision: Precision) -> f64 {
    if precision.is_double() {
        quasi_potential_with(&f.lift().compile::<f64>(precision), z)
    } else {
        quasi_potential_with(&f.lift().compile::<Mp>(precision), z)
    }
}

pub fn quasi_potential_with<T: Real>(cv: &CompiledVector<T>, z: &[Complex64]) -> f64 {
    let Some(z) = normalize(z) else {
        return f64::NEG_INFINITY;
    };
    let v = cv.eval(&to_cx::<T>(&z, cv.prec()));
    u_from_norm(&vec_norm(&v), cv.degree())
}

/// Log-distance proxy `u(Z)/2` to I⁺.
pub fn log_alg_dist(f: &RationalMap, z: &[Complex64]) -> f64 {
    quasi_potential_u(f, z, Precision::DOUBLE) / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSeries {
    pub base: Point,
    pub n: usize,
    pub degree: u32,
    /// `u(Z_n)` for `n = 0..=N`.
    pub terms: Vec<f64>,
    /// `G_n = sum_{j<=n} d^{-j} u(Z_j)`.
    pub partial_sums: Vec<f64>,
    /// `log|F(Z_n)|` of the renormalized orbit.
    pub orbit_log: Vec<f64>,
    /// Largest `|u|` along the computed orbit.
    pub sup_abs_u: f64,
    /// `sup|u| d^{-N} / (1 - 1/d)`.
    pub tail_bound: f64,
}

impl PotentialSeries {
    pub fn value(&self) -> f64 {
        *self.partial_sums.last().expect("N >= 0")
    }

    /// Tail bound after `m` terms, using the orbit's `sup|u|`.
    pub fn tail_bound_at(&self, m: usize) -> f64 {
        tail_bound(self.sup_abs_u, self.degree, m)
    }
}

pub fn tail_bound(sup_abs_u: f64, degree: u32, n: usize) -> f64 {
    let d = degree as f64;
    if d <= 1.0 {
        return f64::INFINITY;
    }
    sup_abs_u * d.powi(-(n as i32)) / (1.0 - 1.0 / d)
}

/// Partial sums `G_0..G_N` along `Z_{n+1} = F(Z_n)/|F(Z_n)|`.
pub fn green_partial(f: &RationalMap, z: &[Complex64], n: usize, precision: Precision) -> Result<PotentialSeries> {
    if precision.is_double() {
        green_partial_with(&f.lift().compile::<f64>(precision), z, n)
    } else {
        green_partial_with(&f.lift().compile::<Mp>(precision), z, n)
    }
}

pub fn green_partial_with<T: Real>(cv: &CompiledVector<T>, z: &[Complex64], n: usize) -> Result<PotentialSeries> {
    let base = normalize(z).ok_or(Error::invalid("zero vector"))?;
    let d = cv.degree();
    let prec = cv.prec();
    let mut cur = to_cx::<T>(&base, prec);
    let mut terms = Vec::with_capacity(n + 1);
    let mut partial_sums = Vec::with_capacity(n + 1);
    let mut orbit_log = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    let mut weight = 1.0;
    for step in 0..=n {
        let v = cv.eval(&cur);
        let nf = vec_norm(&v);
        let u = u_from_norm(&nf, d);
        if !u.is_finite() {
            return Err(Error::OrbitHitsIndeterminacy { step });
        }
        orbit_log.push(nf.ln().to_f64());
        acc += weight * u;
        weight /= d as f64;
        terms.push(u);
        partial_sums.push(acc);
        let inv = T::one(prec) / nf;
        cur = v.iter().map(|c| c.scale(&inv)).collect();
    }
    let sup_abs_u = terms.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    Ok(PotentialSeries {
        base,
        n,
        degree: d,
        terms,
        partial_sums,
        orbit_log,
        sup_abs_u,
        tail_bound: tail_bound(sup_abs_u, d, n),
    })
}

/// Green partial sums at many points, in parallel and in input order.
pub fn green_many(f: &RationalMap, points: &[Point], n: usize, precision: Precision) -> Vec<Result<PotentialSeries>> {
    if precision.is_double() {
        let cv = f.lift().compile::<f64>(precision);
        crate::stream::par_map(points, |_, z| green_partial_with(&cv, z, n))
    } else {
        let cv = f.lift().compile::<Mp>(precision);
        crate::stream::par_map(points, |_, z| green_partial_with(&cv, z, n))
    }
}

/// Renormalized image, for callers that iterate the map directly.
pub fn push_point<T: Real>(cv: &CompiledVector<T>, z: &[Complex64]) -> Option<Point> {
    let v = cv.eval(&to_cx::<T>(z, cv.prec()));
    let nf = vec_norm(&v);
    if !u_from_norm(&nf, cv.degree()).is_finite() {
        return None;
    }
    normalize(&to_c64(&v))
}

/// Empirical constants of `A log d - B <= u <= A' log d + B'`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogDistanceFit {
    pub a: f64,
    pub b: f64,
    pub a_prime: f64,
    pub b_prime: f64,
    /// Spearman rank correlation between `u/2` and the FS log-distance.
    pub spearman: f64,
    pub samples: usize,
}

/// Samples points at log-uniform FS distance `10^{-6}..10^{-1}` from the
/// I⁺ witnesses and fits the two affine envelopes with a common slope.
pub fn fit_log_distance(f: &RationalMap, data: &IndeterminacyData, samples: usize, seed: u64) -> Result<LogDistanceFit> {
    if data.witnesses.is_empty() {
        return Err(Error::invalid("no witnesses to fit against"));
    }
    if samples < 10 {
        return Err(Error::invalid("need at least 10 samples"));
    }
    let k = f.k();
    let cv = f.lift().compile::<f64>(Precision::DOUBLE);
    let pts: Vec<Option<(f64, f64)>> = par_indexed(seed, samples, |_, rng| {
        let w = &data.witnesses[rng.random_range(0..data.witnesses.len())];
        let eps = 10f64.powf(-rng.random_range(1.0..6.0));
        let g = fs_uniform(k, rng);
        let z = normalize(&w.iter().zip(&g).map(|(a, b)| a + b * eps).collect::<Vec<_>>())?;
        let dist = data.distance(&z);
        let u = quasi_potential_with(&cv, &z);
        (dist > 0.0 && u.is_finite()).then(|| (dist.ln(), u))
    });
    let pts: Vec<(f64, f64)> = pts.into_iter().flatten().collect();
    if pts.len() < 10 {
        return Err(Error::AllSamplesRejected);
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b_prime = pts.iter().map(|(x, y)| y - a * x).fold(f64::NEG_INFINITY, f64::max);
    let b = pts.iter().map(|(x, y)| a * x - y).fold(f64::NEG_INFINITY, f64::max);
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1 / 2.0).collect();
    Ok(LogDistanceFit {
        a,
        b,
        a_prime: a,
        b_prime,
        spearman: spearman(&xs, &ys),
        samples: pts.len(),
    })
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for t in i..=j {
            r[idx[t]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Whether a raw `u` value counts as `-inf` for series semantics.
pub fn is_sentinel(u: f64) -> bool {
    !(u >= SENTINEL)
}
