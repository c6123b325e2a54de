//! Exact sampling of `ν_n` for `l = 1` by the Crofton formula.
//!
//! With `L` a uniformly random line and `H` a uniformly random hyperplane,
//! `(f^n)^*ω ∧ ω^{k-1}` is the average of the counting measure of
//! `L ∩ f^{-n}(H)`, which has `deg f^n` points. A sample of `ν_n` is thus a
//! uniformly chosen root of `p(t) = <h, F^n(a + t b)>`.
//!
//! The root is chosen by a quadtree descent in which each cell's root count
//! comes from the argument principle. Only the phase of `p` is needed, and
//! it survives renormalizing the orbit by positive reals, so large degrees
//! never overflow.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::geometry::{fs_uniform, normalize, orthonormalize, Point};
use crate::numeric::Real;
use crate::poly::PolyVector;

/// Largest phase step accepted between neighbouring contour samples.
const MAX_STEP: f64 = PI / 3.0;
/// Step length along a contour as a fraction of `|p/p'|`.
const STEP_FRACTION: f64 = 0.5;
const MAX_EDGE_STEPS: usize = 1 << 22;
/// Cells are refined until the single root they hold is pinned this well.
const ROOT_TOL: f64 = 1e-13;
const MAX_LEVELS: usize = 200;
/// An orbit step whose image norm falls below this marks a root of a
/// factor that the iterated lift shares across its components.
const SPURIOUS_NORM: f64 = 1e-9;
const MAX_SLICES: usize = 1000;

type Vc = SmallVec<[Complex64; 4]>;

/// The lift in double precision, evaluated together with a directional
/// derivative.
pub(crate) struct FastLift {
    comps: Vec<Vec<(Complex64, SmallVec<[u32; 4]>)>>,
    max_exp: Vec<usize>,
    degree: u32,
}

impl FastLift {
    pub fn new(f: &PolyVector) -> Self {
        let comps: Vec<Vec<_>> = f
            .components()
            .iter()
            .map(|c| {
                c.terms()
                    .map(|(m, q)| (Complex64::new(<f64 as Real>::from_ratio(q, 53), 0.0), m.0.clone()))
                    .collect()
            })
            .collect();
        let max_exp = (0..=f.k())
            .map(|j| comps.iter().flatten().map(|(_, e)| e[j] as usize).max().unwrap_or(0))
            .collect();
        FastLift {
            comps,
            max_exp,
            degree: f.degree(),
        }
    }

    fn dim(&self) -> usize {
        self.max_exp.len()
    }

    fn powers(&self, z: &[Complex64], table: &mut Vec<Vec<Complex64>>) {
        table.resize(z.len(), Vec::new());
        for ((row, x), &m) in table.iter_mut().zip(z).zip(&self.max_exp) {
            row.clear();
            row.push(Complex64::new(1.0, 0.0));
            for e in 1..=m {
                row.push(row[e - 1] * x);
            }
        }
    }

    fn eval(&self, z: &[Complex64], table: &mut Vec<Vec<Complex64>>) -> Vc {
        self.powers(z, table);
        self.comps
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|(c, e)| e.iter().enumerate().fold(*c, |acc, (j, &ej)| acc * table[j][ej as usize]))
                    .sum()
            })
            .collect()
    }

    /// `F(z)` and `DF(z) dz`.
    fn eval_dir(&self, z: &[Complex64], dz: &[Complex64], table: &mut Vec<Vec<Complex64>>) -> (Vc, Vc) {
        self.powers(z, table);
        let mut v = Vc::new();
        let mut dv = Vc::new();
        for terms in &self.comps {
            let mut s = Complex64::new(0.0, 0.0);
            let mut ds = Complex64::new(0.0, 0.0);
            for (c, e) in terms {
                s += e.iter().enumerate().fold(*c, |acc, (j, &ej)| acc * table[j][ej as usize]);
                for (i, &ei) in e.iter().enumerate() {
                    if ei == 0 {
                        continue;
                    }
                    let part = e.iter().enumerate().fold(*c * ei as f64 * dz[i], |acc, (j, &ej)| {
                        acc * table[j][if j == i { ej as usize - 1 } else { ej as usize }]
                    });
                    ds += part;
                }
            }
            v.push(s);
            dv.push(ds);
        }
        (v, dv)
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn pair(h: &[Complex64], v: &[Complex64]) -> Complex64 {
    h.iter().zip(v).map(|(h, c)| h.conj() * c).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Chart {
    /// `a + t b`
    A,
    /// `t a + b`
    B,
}

/// Phase changes along already traversed segments, keyed by endpoints.
/// Cells of the descent are dyadic, so shared edges have identical
/// endpoints.
#[derive(Default)]
struct EdgeCache(HashMap<[u64; 4], f64>);

impl EdgeCache {
    fn key(t0: Complex64, t1: Complex64) -> [u64; 4] {
        [t0.re.to_bits(), t0.im.to_bits(), t1.re.to_bits(), t1.im.to_bits()]
    }

    fn get(&self, t0: Complex64, t1: Complex64) -> Option<f64> {
        self.0
            .get(&Self::key(t0, t1))
            .copied()
            .or_else(|| self.0.get(&Self::key(t1, t0)).map(|v| -v))
    }
}

/// One random line and hyperplane.
pub(crate) struct Slice<'a> {
    lift: &'a FastLift,
    n: usize,
    h: Point,
    a: Point,
    b: Point,
}

impl<'a> Slice<'a> {
    pub fn random(lift: &'a FastLift, n: usize, rng: &mut ChaCha8Rng) -> Self {
        let k = lift.dim() - 1;
        let h = fs_uniform(k, rng);
        let mut ab = orthonormalize(&[fs_uniform(k, rng), fs_uniform(k, rng)]);
        while ab.len() < 2 {
            ab = orthonormalize(&[fs_uniform(k, rng), fs_uniform(k, rng)]);
        }
        let b = ab.pop().expect("two vectors");
        let a = ab.pop().expect("two vectors");
        Slice { lift, n, h, a, b }
    }

    fn point(&self, t: Complex64, chart: Chart) -> Point {
        match chart {
            Chart::A => self.a.iter().zip(&self.b).map(|(x, y)| x + t * y).collect(),
            Chart::B => self.a.iter().zip(&self.b).map(|(x, y)| t * x + y).collect(),
        }
    }

    /// `(p, dp/dt)` at `t`, both divided by the same positive factor.
    fn value_and_derivative(&self, t: Complex64, chart: Chart) -> Option<(Complex64, Complex64)> {
        let dir = match chart {
            Chart::A => &self.b,
            Chart::B => &self.a,
        };
        let mut table = Vec::new();
        let mut v: Vc = self.point(t, chart).into_iter().collect();
        let mut dv: Vc = dir.iter().copied().collect();
        for _ in 0..self.n {
            let (w, dw) = self.lift.eval_dir(&v, &dv, &mut table);
            let nv = norm(&w);
            if !(nv > 0.0) || !nv.is_finite() {
                return None;
            }
            v = w.iter().map(|c| c / nv).collect();
            dv = dw.iter().map(|c| c / nv).collect();
        }
        let p = pair(&self.h, &v);
        let dp = pair(&self.h, &dv);
        (p.is_finite() && dp.is_finite() && p != Complex64::new(0.0, 0.0)).then_some((p, dp))
    }

    /// Change of `arg p` along the segment `[t0, t1]`. The step is kept
    /// below a fraction of `|p/p'|`, which bounds the distance to the
    /// nearest root, so no root close to the path is stepped over.
    fn traverse(&self, t0: Complex64, t1: Complex64, chart: Chart) -> Option<f64> {
        let len = (t1 - t0).norm();
        let dir = (t1 - t0) / len;
        let mut s = 0.0;
        let (mut p, mut dp) = self.value_and_derivative(t0, chart)?;
        let mut total = 0.0;
        let mut guard = 0usize;
        while s < len {
            let g = (dp / p).norm();
            let mut h = (STEP_FRACTION / g).min(len - s);
            loop {
                guard += 1;
                if guard > MAX_EDGE_STEPS || h < 1e-300 {
                    return None;
                }
                let t = if s + h >= len { t1 } else { t0 + dir * (s + h) };
                let (q, dq) = self.value_and_derivative(t, chart)?;
                let d = (q / p).arg();
                if d.abs() <= MAX_STEP {
                    total += d;
                    s += h;
                    p = q;
                    dp = dq;
                    break;
                }
                h /= 2.0;
            }
        }
        Some(total)
    }

    /// Phase change along an edge, traversed as two cached halves so that
    /// the children of a cell find their outer edges already done.
    fn edge(&self, t0: Complex64, t1: Complex64, chart: Chart, cache: &mut EdgeCache) -> Option<f64> {
        if let Some(v) = cache.get(t0, t1) {
            return Some(v);
        }
        let m = 0.5 * (t0 + t1);
        let left = self.traverse(t0, m, chart)?;
        let right = self.traverse(m, t1, chart)?;
        cache.0.insert(EdgeCache::key(t0, m), left);
        cache.0.insert(EdgeCache::key(m, t1), right);
        cache.0.insert(EdgeCache::key(t0, t1), left + right);
        Some(left + right)
    }

    /// Number of roots in the open square of centre `c` and half-width `r`.
    fn count(&self, c: Complex64, r: f64, chart: Chart, cache: &mut EdgeCache) -> Option<u64> {
        let corners = [
            c + Complex64::new(-r, -r),
            c + Complex64::new(r, -r),
            c + Complex64::new(r, r),
            c + Complex64::new(-r, r),
        ];
        let mut total = 0.0;
        for e in 0..4 {
            total += self.edge(corners[e], corners[(e + 1) % 4], chart, cache)?;
        }
        let w = total / TAU;
        let n = w.round();
        ((w - n).abs() < 0.05 && n >= 0.0).then_some(n as u64)
    }

    /// A uniformly random root among the `total` roots in the square
    /// `[-1,1]^2` of the chart.
    fn descend(&self, chart: Chart, total: u64, cache: &mut EdgeCache, rng: &mut ChaCha8Rng) -> Option<Complex64> {
        let mut c = Complex64::new(0.0, 0.0);
        let mut r = 1.0;
        let mut n = total;
        for _ in 0..MAX_LEVELS {
            if n == 1 {
                if let Some(t) = self.polish(c, r, chart) {
                    return Some(t);
                }
                if r < ROOT_TOL {
                    return Some(c);
                }
            }
            let h = r / 2.0;
            let kids = [
                c + Complex64::new(-h, -h),
                c + Complex64::new(h, -h),
                c + Complex64::new(-h, h),
                c + Complex64::new(h, h),
            ];
            let mut counts = [0u64; 4];
            for (cnt, kid) in counts.iter_mut().zip(&kids) {
                *cnt = self.count(*kid, h, chart, cache)?;
            }
            if counts.iter().sum::<u64>() != n {
                return None;
            }
            let mut pick = rng.random_range(0..n);
            let mut idx = 0;
            while pick >= counts[idx] {
                pick -= counts[idx];
                idx += 1;
            }
            c = kids[idx];
            r = h;
            n = counts[idx];
        }
        None
    }

    /// Newton from the centre of a cell holding a single root; accepted only
    /// if it converges inside the cell.
    fn polish(&self, c: Complex64, r: f64, chart: Chart) -> Option<Complex64> {
        let mut t = c;
        for _ in 0..60 {
            let (p, dp) = self.value_and_derivative(t, chart)?;
            let s = p / dp;
            if !s.is_finite() {
                return None;
            }
            t -= s;
            if (t - c).re.abs() > r || (t - c).im.abs() > r {
                return None;
            }
            if s.norm() <= ROOT_TOL * (1.0 + t.norm()) {
                return Some(t);
            }
        }
        None
    }

    /// A uniformly random point of `L ∩ f^{-n}(H)` when the lift of `f^n`
    /// has `degree` roots on `L`. Chart `A` covers `[-1,1]^2`, chart `B`
    /// the rest of the line; roots of chart `B` lying in the first square
    /// are rejected so that each root is counted once.
    pub fn sample_root(&self, degree: u64, rng: &mut ChaCha8Rng) -> Option<Point> {
        let origin = Complex64::new(0.0, 0.0);
        let mut cache_a = EdgeCache::default();
        let in_a = self.count(origin, 1.0, Chart::A, &mut cache_a)?;
        if in_a > degree {
            return None;
        }
        if rng.random_range(0..degree) < in_a {
            let t = self.descend(Chart::A, in_a, &mut cache_a, rng)?;
            return normalize(&self.point(t, Chart::A));
        }
        let mut cache_b = EdgeCache::default();
        let in_b = self.count(origin, 1.0, Chart::B, &mut cache_b)?;
        if in_b + in_a < degree {
            return None;
        }
        for _ in 0..64 {
            let s = self.descend(Chart::B, in_b, &mut cache_b, rng)?;
            if s.norm() > 0.0 {
                let t = 1.0 / s;
                if t.re.abs() > 1.0 || t.im.abs() > 1.0 {
                    return normalize(&self.point(s, Chart::B));
                }
            }
        }
        None
    }
}

/// Smallest `|F(v)|` over the first `n` steps of the normalized orbit.
fn min_step_norm(lift: &FastLift, z: &[Complex64], n: usize) -> f64 {
    let mut table = Vec::new();
    let mut v: Vc = z.iter().copied().collect();
    let mut least = f64::INFINITY;
    for _ in 0..n {
        v = lift.eval(&v, &mut table);
        let nv = norm(&v);
        least = least.min(nv);
        if !(nv > 0.0) || !nv.is_finite() {
            return 0.0;
        }
        v.iter_mut().for_each(|c| *c /= nv);
    }
    least
}

pub(crate) struct CroftonDraw {
    pub point: Point,
    /// Slices that ended in a spurious root.
    pub spurious: usize,
}

/// One sample of `ν_n` for `l = 1`. A slice whose chosen root is spurious
/// is discarded whole; every generic slice has the same number of genuine
/// roots, so the accepted draws stay uniform. `None` once `MAX_SLICES`
/// slices have been tried without success.
pub(crate) fn draw(lift: &FastLift, n: usize, rng: &mut ChaCha8Rng) -> Option<CroftonDraw> {
    let degree = (lift.degree as u64).checked_pow(n as u32)?;
    let mut spurious = 0;
    for _ in 0..MAX_SLICES {
        let slice = Slice::random(lift, n, rng);
        match slice.sample_root(degree, rng) {
            Some(z) if min_step_norm(lift, &z, n) < SPURIOUS_NORM => spurious += 1,
            Some(point) => return Some(CroftonDraw { point, spurious }),
            None => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::catalog;
    use crate::numeric::{Cx, Precision};
    use crate::poly::CompiledVector;
    use rand::SeedableRng;

    #[test]
    fn fast_lift_matches_compiled_jacobian() {
        let f = catalog::p3_example().forward;
        let fast = FastLift::new(f.lift());
        let cv: CompiledVector<f64> = f.lift().compile(Precision::DOUBLE);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = fs_uniform(3, &mut rng);
        let dz = fs_uniform(3, &mut rng);
        let (v, dv) = fast.eval_dir(&z, &dz, &mut Vec::new());
        let zc: Vec<Cx<f64>> = z.iter().map(|c| Cx::new(c.re, c.im)).collect();
        let (w, jac) = cv.eval_with_jacobian(&zc);
        for i in 0..4 {
            assert!((v[i] - Complex64::new(w[i].re, w[i].im)).norm() < 1e-12);
            let d: Complex64 = (0..4).map(|j| Complex64::new(jac[i][j].re, jac[i][j].im) * dz[j]).sum();
            assert!((dv[i] - d).norm() < 1e-12);
        }
    }

    #[test]
    fn counts_all_roots_of_a_power_map_slice() {
        let f = catalog::power_map(1, 2).unwrap();
        let lift = FastLift::new(f.lift());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let origin = Complex64::new(0.0, 0.0);
        for n in 1..=5 {
            let s = Slice::random(&lift, n, &mut rng);
            let a = s.count(origin, 1.0, Chart::A, &mut EdgeCache::default()).unwrap();
            let b = s.count(origin, 1.0, Chart::B, &mut EdgeCache::default()).unwrap();
            // The two squares cover P^1 and overlap, so together they see
            // at least every root.
            assert!(a + b >= 1 << n, "n={n}: {a} + {b}");
            assert!(a <= 1 << n && b <= 1 << n);
        }
    }

    #[test]
    fn sampled_points_lie_on_the_preimage() {
        let f = catalog::henon_default().forward;
        let lift = FastLift::new(f.lift());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        let mut got = 0;
        for _ in 0..20 {
            let s = Slice::random(&lift, n, &mut rng);
            if let Some(z) = s.sample_root(16, &mut rng) {
                got += 1;
                let mut v: Vc = z.iter().copied().collect();
                for _ in 0..n {
                    v = lift.eval(&v, &mut Vec::new());
                    let nv = norm(&v);
                    v.iter_mut().for_each(|c| *c /= nv);
                }
                let p = pair(&s.h, &v);
                assert!(p.norm() < 1e-8, "{p}");
                let on_line = crate::geometry::fs_distance_to_subspace(&z, &[s.a.clone(), s.b.clone()]);
                assert!(on_line < 1e-7, "{on_line}");
            }
        }
        assert!(got >= 18);
    }

    #[test]
    fn cremona_roots_are_mostly_spurious() {
        // deg f^2 = 1 while the iterated lift has degree 4: three of the four
        // roots on a line come from the factor xyz.
        let f = catalog::cremona().forward;
        let lift = FastLift::new(f.lift());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (mut spurious, mut total) = (0, 0);
        for _ in 0..200 {
            let d = draw(&lift, 2, &mut rng).unwrap();
            spurious += d.spurious;
            total += d.spurious + 1;
        }
        let genuine = 200.0 / total as f64;
        assert!((genuine - 0.25).abs() < 0.08, "{genuine} {spurious}");
    }
}
