use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quasi_potential_with;
use crate::error::{Error, Result};
use crate::geometry::{orthonormalize, random_in_span, Point};
use crate::maps::catalog::with_witnesses;
use crate::maps::{BirationalPair, IndeterminacyData, RationalMap};
use crate::measures::{frame, singular_values_sq, step, to_dmatrix, u_from_norm};
use crate::numeric::{to_cx, Cx, Precision};
use crate::poly::CompiledVector;
use crate::stats::mean_stderr;
use crate::stream::{child_seed, chunk_rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypothesisKind {
    StrongForward,
    StrongBackward,
    WeakForward,
    WeakBackward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Converges => "CONVERGES",
            Verdict::Diverges => "DIVERGES",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Log-distance used in the strong series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceEstimator {
    /// `u/2` of the map whose indeterminacy set is the target.
    Proxy,
    /// FS distance to the target set.
    Fs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub kind: HypothesisKind,
    /// Weighted terms, `d^{-n} log dist` (strong) or `d^{-sn}` times the
    /// normalized integral (weak).
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Fitted geometric ratio on the tail half; `None` when fewer than two
    /// nonzero tail terms exist.
    pub ratio: Option<f64>,
    /// `|term_n| <= C r^n` with `r < 1` on the tail half.
    pub dominated: bool,
    pub verdict: Verdict,
    /// First index whose term is `-inf`.
    pub collision_at: Option<usize>,
    pub witnesses: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongSeriesReport {
    pub forward: HypothesisReport,
    pub backward: HypothesisReport,
    pub verdict: Verdict,
}

/// Least-squares ratio `r` in `log|t_n| ~ a + n log r` over the nonzero
/// finite terms with index at least `len/2`.
pub fn fit_ratio(terms: &[f64]) -> Option<f64> {
    let start = terms.len() / 2;
    let pts: Vec<(f64, f64)> = terms
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, t)| t.is_finite() && **t != 0.0)
        .map(|(n, t)| (n as f64, t.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some((sxy / sxx).exp())
}

/// `CONVERGES` for `r <= 0.99` (or all-zero tails), `DIVERGES` for a
/// collision or `r >= 1.01`, `INCONCLUSIVE` in between.
pub fn verdict_for(ratio: Option<f64>, collision: bool) -> Verdict {
    if collision {
        return Verdict::Diverges;
    }
    match ratio {
        None => Verdict::Converges,
        Some(r) if r <= 0.99 => Verdict::Converges,
        Some(r) if r >= 1.01 => Verdict::Diverges,
        Some(_) => Verdict::Inconclusive,
    }
}

fn combine(a: Verdict, b: Verdict) -> Verdict {
    match (a, b) {
        (Verdict::Diverges, _) | (_, Verdict::Diverges) => Verdict::Diverges,
        (Verdict::Converges, Verdict::Converges) => Verdict::Converges,
        _ => Verdict::Inconclusive,
    }
}

fn report(kind: HypothesisKind, terms: Vec<f64>, witnesses: usize, samples: usize, seed: u64) -> HypothesisReport {
    let collision_at = terms.iter().position(|t| !t.is_finite());
    let mut acc = 0.0;
    let partial_sums = terms
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect();
    let ratio = fit_ratio(&terms);
    let verdict = verdict_for(ratio, collision_at.is_some());
    HypothesisReport {
        kind,
        dominated: collision_at.is_none() && ratio.is_none_or(|r| r < 1.0),
        terms,
        partial_sums,
        ratio,
        verdict,
        collision_at,
        witnesses,
        samples,
        seed,
    }
}

fn cloud(data: &IndeterminacyData, per_set: usize, seed: u64) -> Vec<Point> {
    if data.has_components() && per_set > 0 {
        with_witnesses(data.clone(), per_set, seed).witnesses
    } else {
        data.witnesses.clone()
    }
}

/// Weighted terms `w^{-n} log dist(target, g^n(cloud))` for `n = 0..=N`.
fn strong_terms(
    push: &RationalMap,
    target_map: &RationalMap,
    target: &IndeterminacyData,
    mut pts: Vec<Point>,
    weight: f64,
    n_max: usize,
    estimator: DistanceEstimator,
) -> Vec<f64> {
    if target.is_empty() || pts.is_empty() {
        return vec![0.0; n_max + 1];
    }
    let cv_push = push.lift().compile::<f64>(Precision::DOUBLE);
    let cv_target = target_map.lift().compile::<f64>(Precision::DOUBLE);
    let mut terms = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let log_dist = match estimator {
            DistanceEstimator::Proxy => pts
                .iter()
                .map(|z| quasi_potential_with(&cv_target, z) / 2.0)
                .fold(f64::INFINITY, f64::min),
            DistanceEstimator::Fs => pts.iter().map(|z| target.distance(z).ln()).fold(f64::INFINITY, f64::min),
        };
        let term = if log_dist.is_finite() && !super::is_sentinel(log_dist) {
            weight.powi(-(n as i32)) * log_dist
        } else {
            f64::NEG_INFINITY
        };
        terms.push(term);
        if !term.is_finite() {
            break;
        }
        let next: Option<Vec<Point>> = pts.iter().map(|z| super::push_point(&cv_push, z)).collect();
        match next {
            Some(p) => pts = p,
            None => {
                // The orbit lands on the indeterminacy set of the pushing map,
                // which for a birational pair meets the target.
                if n < n_max {
                    terms.push(f64::NEG_INFINITY);
                }
                break;
            }
        }
    }
    terms
}

/// Partial sums of `sum d^{-n} log dist(I⁺, f^n(I⁻))` and of the mirrored
/// series with `δ` and `f^{-1}`.
pub fn hypothesis_strong_series(
    pair: &BirationalPair,
    n_max: usize,
    witnesses_per_set: usize,
    estimator: DistanceEstimator,
    seed: u64,
) -> Result<StrongSeriesReport> {
    let (ip, im) = match (pair.i_plus(), pair.i_minus()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::invalid("indeterminacy data for both maps is required")),
    };
    let from_minus = cloud(im, witnesses_per_set, child_seed(seed, 0));
    let from_plus = cloud(ip, witnesses_per_set, child_seed(seed, 1));
    let (nf, nb) = (from_minus.len(), from_plus.len());
    let fwd = strong_terms(&pair.forward, &pair.forward, ip, from_minus, pair.d() as f64, n_max, estimator);
    let bwd = strong_terms(&pair.inverse, &pair.inverse, im, from_plus, pair.delta() as f64, n_max, estimator);
    let forward = report(HypothesisKind::StrongForward, fwd, nf, 0, seed);
    let backward = report(HypothesisKind::StrongBackward, bwd, nb, 0, seed);
    let verdict = combine(forward.verdict, backward.verdict);
    Ok(StrongSeriesReport { forward, backward, verdict })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakTerm {
    pub n: usize,
    /// `deg(I)^{-1} ∫_{g^n(I)} u L(ω^{dim})`.
    pub integral: f64,
    pub stderr: f64,
    /// `integral` times `(d^s)^{-n}`.
    pub weighted: f64,
    pub samples: usize,
}

/// Monte-Carlo estimate of the `n`-th term of the weak series.
///
/// Each linear component `P` of the source set is parametrized by its
/// orthonormal frame. At a point `p` of `P` the integrand is `u(f^n(p))`
/// times `d^{-m} det(D^H D)`, where `m = dim P` and `D` is the projective
/// differential of `f^{n+1}` restricted to the tangent space of `P`. For a
/// source made of points this reduces to the average of `u` over the pushed
/// points.
pub fn hypothesis_weak_integral(pair: &BirationalPair, n: usize, mc_samples: usize, seed: u64) -> Result<WeakTerm> {
    let s = pair.s.ok_or(Error::invalid("s must be declared"))?;
    let im = pair.i_minus().ok_or(Error::invalid("backward indeterminacy data required"))?;
    let weight = (pair.d() as f64).powi(s as i32);
    weak_term(&pair.forward, im, pair.deg_i_minus, weight, n, mc_samples, seed)
}

/// Mirrored term: `f^{-1}`, the I⁺ components and weight `δ^{k-s}`.
pub fn hypothesis_weak_integral_backward(pair: &BirationalPair, n: usize, mc_samples: usize, seed: u64) -> Result<WeakTerm> {
    let s = pair.s.ok_or(Error::invalid("s must be declared"))?;
    let ip = pair.i_plus().ok_or(Error::invalid("forward indeterminacy data required"))?;
    let weight = (pair.delta() as f64).powi((pair.k() - s) as i32);
    weak_term(&pair.inverse, ip, None, weight, n, mc_samples, seed)
}

fn weak_term(
    f: &RationalMap,
    source: &IndeterminacyData,
    declared_degree: Option<u32>,
    weight: f64,
    n: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<WeakTerm> {
    let cv = f.lift().compile::<f64>(Precision::DOUBLE);
    let d = f.degree() as f64;
    let frames = source.frames();
    if frames.is_empty() {
        if source.witnesses.is_empty() {
            return Ok(WeakTerm {
                n,
                integral: 0.0,
                stderr: 0.0,
                weighted: 0.0,
                samples: 0,
            });
        }
        if source.declared_dim > 0 {
            return Err(Error::DegenerateParametrization);
        }
        // Points only: average u over the pushed witnesses.
        let vals = source
            .witnesses
            .iter()
            .map(|w| pushed_potential(&cv, w, n))
            .collect::<Result<Vec<f64>>>()?;
        let integral = vals.iter().sum::<f64>() / vals.len() as f64;
        return Ok(WeakTerm {
            n,
            integral,
            stderr: 0.0,
            weighted: integral / weight.powi(n as i32),
            samples: vals.len(),
        });
    }
    let mut total = 0.0;
    let mut var = 0.0;
    let mut samples = 0;
    for (ci, basis) in frames.iter().enumerate() {
        let m = basis.len() - 1;
        if m == 0 {
            total += pushed_potential(&cv, &basis[0], n)?;
            samples += 1;
            continue;
        }
        let mut rng = chunk_rng(seed, ci as u64);
        let mut vals = Vec::with_capacity(mc_samples);
        for _ in 0..mc_samples {
            let p = random_in_span(basis, &mut rng);
            let (u, density) = restricted_density(&cv, basis, &p, n)?;
            vals.push(u * density / d.powi(m as i32));
        }
        if vals.iter().all(|v| *v == 0.0) {
            return Err(Error::DegenerateParametrization);
        }
        let (mean, se) = mean_stderr(vals.iter().copied());
        total += mean;
        var += se * se;
        samples += vals.len();
    }
    let degree = declared_degree.map(|g| g as f64).unwrap_or(frames.len() as f64);
    let integral = total / degree;
    Ok(WeakTerm {
        n,
        integral,
        stderr: var.sqrt() / degree,
        weighted: integral / weight.powi(n as i32),
        samples,
    })
}

/// `u(f^n(p))`.
fn pushed_potential(cv: &CompiledVector<f64>, p: &[Complex64], n: usize) -> Result<f64> {
    let mut cur = p.to_vec();
    for step_i in 0..n {
        cur = super::push_point(cv, &cur).ok_or(Error::OrbitHitsIndeterminacy { step: step_i + 1 })?;
    }
    let u = quasi_potential_with(cv, &cur);
    if u.is_finite() {
        Ok(u)
    } else {
        Err(Error::OrbitHitsIndeterminacy { step: n })
    }
}

/// `(u(f^n(p)), det(D^H D))` with `D` the differential of `f^{n+1}` on the
/// tangent space of the span of `basis` at `p`.
fn restricted_density(cv: &CompiledVector<f64>, basis: &[Point], p: &[Complex64], n: usize) -> Result<(f64, f64)> {
    let mut with_p = vec![p.to_vec()];
    with_p.extend(basis.iter().cloned());
    let tangent: Vec<Point> = orthonormalize(&with_p).into_iter().skip(1).collect();
    let pc: Vec<Cx<f64>> = to_cx(p, 53);
    let e_in = frame(&pc);
    let k = p.len() - 1;
    let c = DMatrix::from_fn(k, tangent.len(), |i, j| {
        e_in[i].iter().zip(&tangent[j]).map(|(a, b)| a.to_c64().conj() * b).sum::<Complex64>()
    });
    let mut cur = pc;
    let mut acc = DMatrix::<Complex64>::identity(k, k);
    let mut u = 0.0;
    for i in 0..=n {
        let s = step(cv, &cur).ok_or(Error::OrbitHitsIndeterminacy { step: i })?;
        if i == n {
            u = u_from_norm(&s.norm_f, cv.degree());
        }
        acc = to_dmatrix(&s.d) * acc;
        cur = s.image;
    }
    let density: f64 = singular_values_sq(&(acc * c)).iter().product();
    Ok((u, density))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::catalog;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn henon_conj() -> BirationalPair {
        catalog::henon_conj(BigRational::from_integer(BigInt::from(-6)), BigRational::new(1.into(), 2.into())).unwrap()
    }

    #[test]
    fn ratio_of_geometric_sequence() {
        let t: Vec<f64> = (0..20).map(|n| -3.0 * 0.5f64.powi(n)).collect();
        assert!((fit_ratio(&t).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(verdict_for(fit_ratio(&t), false), Verdict::Converges);
        let grow: Vec<f64> = (0..20).map(|n| -(1.2f64.powi(n))).collect();
        assert_eq!(verdict_for(fit_ratio(&grow), false), Verdict::Diverges);
        let flat: Vec<f64> = (0..20).map(|_| -1.0).collect();
        assert_eq!(verdict_for(fit_ratio(&flat), false), Verdict::Inconclusive);
    }

    #[test]
    fn henon_strong_series_converges_at_ratio_half() {
        let r = hypothesis_strong_series(&henon_conj(), 20, 4, DistanceEstimator::Proxy, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Converges);
        let ratio = r.forward.ratio.unwrap();
        assert!((ratio - 0.5).abs() < 0.01, "{ratio}");
        assert!(r.forward.terms.iter().all(|t| *t < 0.0));
        let ps = &r.forward.partial_sums;
        assert!(ps.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn standard_henon_terms_vanish() {
        // I⁻ = [0:1:0] is fixed and at distance 1 from I⁺ = [1:0:0].
        let r = hypothesis_strong_series(&catalog::henon_default(), 10, 1, DistanceEstimator::Fs, 1).unwrap();
        assert!(r.forward.terms.iter().all(|t| t.abs() < 1e-15));
    }

    #[test]
    fn empty_indeterminacy_gives_zero_terms() {
        let r = hypothesis_strong_series(&catalog::linear_diag(), 5, 1, DistanceEstimator::Proxy, 1).unwrap();
        assert!(r.forward.terms.iter().all(|t| *t == 0.0));
        assert_eq!(r.verdict, Verdict::Converges);
    }

    #[test]
    fn cremona_collides() {
        let r = hypothesis_strong_series(&catalog::cremona(), 5, 1, DistanceEstimator::Proxy, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Diverges);
        assert_eq!(r.forward.collision_at, Some(0));
    }

    #[test]
    fn weak_terms_track_strong_terms_in_the_plane() {
        let pair = henon_conj();
        let strong = hypothesis_strong_series(&pair, 10, 1, DistanceEstimator::Fs, 1).unwrap();
        let weak: Vec<f64> = (0..=10).map(|n| hypothesis_weak_integral(&pair, n, 10, 2).unwrap().weighted).collect();
        let r2 = crate::stats::r_squared(&strong.forward.terms, &weak);
        assert!(r2 > 0.95, "{r2}");
    }

    #[test]
    fn weak_term_at_zero_is_bounded_by_sup() {
        let pair = catalog::regular_auto_c3(BigRational::from_integer(1.into()), BigRational::from_integer(0.into())).unwrap();
        let t = hypothesis_weak_integral(&pair, 0, 2000, 3).unwrap();
        assert!(t.integral.is_finite() && t.integral < 0.0, "{t:?}");
    }

    #[test]
    fn regular_c3_weak_series_decays() {
        let pair = catalog::regular_auto_c3(BigRational::from_integer(1.into()), BigRational::from_integer(0.into())).unwrap();
        let terms: Vec<f64> = (0..=6).map(|n| hypothesis_weak_integral(&pair, n, 500, 4).unwrap().weighted).collect();
        assert!(terms.iter().all(|t| t.is_finite()), "{terms:?}");
        assert!(terms[6].abs() < terms[0].abs(), "{terms:?}");
    }
}
