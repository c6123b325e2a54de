//! Degree growth under iteration: exact algebraic degrees and Monte-Carlo
//! estimates of the higher degrees.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, fs_distance, fs_uniform, normalize, Point};
use crate::maps::{BirationalPair, IndeterminacyData, RationalMap};
use crate::measures::{binomial, differential_from, elementary_symmetric};
use crate::numeric::{Mp, Precision, Real};
use crate::poly::{CompiledVector, DEFAULT_TERM_CAP};
use crate::stats::mean_stderr;
use crate::stream::par_indexed;

/// Samples this close (FS) to the forward indeterminacy set are redrawn.
pub const REJECTION_RADIUS: f64 = 1e-6;
/// Samples with `|F(Z)| / |Z|^d` below this are redrawn.
pub const MIN_IMAGE_NORM: f64 = 1e-12;
const MAX_ATTEMPTS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeSequence {
    pub label: String,
    /// `(n, deg f^n)` for `n = 1..=N`.
    pub entries: Vec<(usize, u32)>,
    /// Last `n` with `deg f^n = d^n`, `None` when every tested `n` is stable.
    pub stable_up_to: Option<usize>,
    pub first_drop: Option<usize>,
}

impl DegreeSequence {
    pub fn is_stable(&self) -> bool {
        self.first_drop.is_none()
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.1).collect()
    }
}

/// Gcd-reduced `f^n`, composed as `f ∘ f^{n-1}`.
pub fn iterate(f: &RationalMap, n: usize, cap: usize) -> Result<RationalMap> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let mut cur = f.clone();
    for _ in 1..n {
        cur = RationalMap::new(f.label.clone(), f.lift().compose_capped(cur.lift(), cap)?)?;
    }
    cur.label = format!("{}^{n}", f.label);
    Ok(cur)
}

pub fn degree_sequence(f: &RationalMap, n_max: usize) -> Result<DegreeSequence> {
    degree_sequence_capped(f, n_max, DEFAULT_TERM_CAP)
}

pub fn degree_sequence_capped(f: &RationalMap, n_max: usize, cap: usize) -> Result<DegreeSequence> {
    if n_max == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let d = f.degree() as u64;
    let mut entries = vec![(1, f.degree())];
    let mut cur = f.lift().clone();
    let mut first_drop = None;
    for n in 2..=n_max {
        let comp = f.lift().compose_capped(&cur, cap).map_err(|e| match e {
            Error::TermCapExceeded { terms, cap } => Error::DegreeTermCap {
                n,
                terms,
                cap,
                partial: entries.iter().map(|e| e.1).collect(),
            },
            e => e,
        })?;
        cur = comp.gcd_reduce()?.0;
        let deg = cur.degree();
        if first_drop.is_none() && (deg as u64) < d.pow(n as u32) {
            first_drop = Some(n);
        }
        entries.push((n, deg));
    }
    Ok(DegreeSequence {
        label: f.label.clone(),
        entries,
        stable_up_to: first_drop.map(|n| n - 1),
        first_drop,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeEstimate {
    pub q: usize,
    pub n: usize,
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    /// Draws discarded near the indeterminacy set before acceptance.
    pub rejected: usize,
    pub rejection_radius: f64,
    /// Set when `q` exceeds the pair's declared `s`. The estimate then
    /// misses any mass the pulled-back current carries on I⁺.
    #[serde(default)]
    pub beyond_s: bool,
}

/// Monte-Carlo estimate of `λ_q(f) = ∫ f^*(ω)^q ∧ ω^{k-q}`: the mean of
/// `e_q(a)/C(k,q)` over FS-uniform points, `a` the squared singular values of
/// the projective differential. When I⁺ witnesses are known, half of the
/// draws are importance-sampled near them to tame the heavy tail of the
/// density there.
pub fn lambda_q_montecarlo(f: &RationalMap, q: usize, samples: usize, seed: u64, precision: Precision) -> Result<DegreeEstimate> {
    lambda_q_with(f, f.indeterminacy(), None, q, samples, seed, precision, 1)
}

/// [`lambda_q_montecarlo`] for the forward map of a birational pair, with a
/// third proposal component `f^{-1}(y)`, `y` FS-uniform. Its density is
/// `f^*(ω)^k` itself, which keeps the weights bounded for `q = k` where the
/// plain proposal misses the mass that `f` spreads over P^k from near I⁺.
pub fn lambda_q_pair(pair: &BirationalPair, q: usize, samples: usize, seed: u64, precision: Precision) -> Result<DegreeEstimate> {
    let mut e = lambda_q_with(&pair.forward, pair.i_plus(), Some(&pair.inverse), q, samples, seed, precision, 1)?;
    e.beyond_s = pair.s.is_some_and(|s| q > s);
    Ok(e)
}

#[allow(clippy::too_many_arguments)]
fn lambda_q_with(
    f: &RationalMap,
    i_plus: Option<&IndeterminacyData>,
    inverse: Option<&RationalMap>,
    q: usize,
    samples: usize,
    seed: u64,
    precision: Precision,
    n: usize,
) -> Result<DegreeEstimate> {
    let k = f.k();
    if q > k {
        return Err(Error::invalid(format!("q = {q} exceeds k = {k}")));
    }
    if samples < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    let base = DegreeEstimate {
        q,
        n,
        value: 1.0,
        stderr: 0.0,
        samples,
        seed,
        rejected: 0,
        rejection_radius: REJECTION_RADIUS,
        beyond_s: false,
    };
    if q == 0 {
        return Ok(base);
    }
    let draws: Vec<Option<(f64, usize)>> = if precision.is_double() {
        let cv: CompiledVector<f64> = f.lift().compile(precision);
        let inv: Option<CompiledVector<f64>> = inverse.map(|g| g.lift().compile(precision));
        par_indexed(seed, samples, |_, rng| {
            density_draw(&cv, inv.as_ref(), i_plus, k, q, precision.bits(), rng)
        })
    } else {
        let cv: CompiledVector<Mp> = f.lift().compile(precision);
        let inv: Option<CompiledVector<Mp>> = inverse.map(|g| g.lift().compile(precision));
        par_indexed(seed, samples, |_, rng| {
            density_draw(&cv, inv.as_ref(), i_plus, k, q, precision.bits(), rng)
        })
    };
    let draws: Vec<(f64, usize)> = draws.into_iter().collect::<Option<_>>().ok_or(Error::AllSamplesRejected)?;
    let (mean, stderr) = mean_stderr(draws.iter().map(|d| d.0));
    Ok(DegreeEstimate {
        value: mean,
        stderr,
        rejected: draws.iter().map(|d| d.1).sum(),
        ..base
    })
}

/// Share of draws taken near the I⁺ witnesses.
const NEAR_SHARE: f64 = 0.5;

/// FS-uniform proposal mixed with draws near a random I⁺ witness `w`. The
/// near draws are `[w + sum c_j e_j]` in an orthonormal frame `e` of `w^⊥`,
/// with independent log-uniform moduli `|c_j| ∈ [REJECTION_RADIUS, 1]`, so
/// that tangential approaches to I⁺ are covered as well as radial ones.
pub(crate) struct Proposal<'a> {
    witnesses: &'a [Point],
    frames: Vec<Vec<Point>>,
    k: usize,
}

impl<'a> Proposal<'a> {
    pub fn new(witnesses: &'a [Point], k: usize) -> Self {
        let frames = witnesses.iter().map(|w| chart_frame(w)).collect();
        Proposal { witnesses, frames, k }
    }

    fn log_range() -> f64 {
        -REJECTION_RADIUS.ln()
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        if self.witnesses.is_empty() || rng.random_range(0.0..1.0) >= NEAR_SHARE {
            return fs_uniform(self.k, rng);
        }
        let i = rng.random_range(0..self.witnesses.len());
        let mut z = self.witnesses[i].clone();
        for e in &self.frames[i] {
            let r = (-rng.random_range(0.0..1.0) * Self::log_range()).exp();
            let c = Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU));
            for (zi, ei) in z.iter_mut().zip(e) {
                *zi += c * ei;
            }
        }
        normalize(&z).expect("unit witness plus orthogonal part")
    }

    /// Density with respect to normalized FS volume.
    pub fn density(&self, z: &[Complex64]) -> f64 {
        if self.witnesses.is_empty() {
            return 1.0;
        }
        let k = self.k as i32;
        let lebesgue_norm = (2.0 * std::f64::consts::PI * Self::log_range()).powi(k);
        let fs_norm = (1..=self.k).map(|j| j as f64).product::<f64>() / std::f64::consts::PI.powi(k);
        let near: f64 = self
            .witnesses
            .iter()
            .zip(&self.frames)
            .map(|(w, frame)| {
                let a = dot(w, z);
                if a.norm() == 0.0 {
                    return 0.0;
                }
                let mut prod = 1.0;
                let mut c2 = 0.0;
                for e in frame {
                    let m2 = (dot(e, z) / a).norm_sqr();
                    if !(REJECTION_RADIUS * REJECTION_RADIUS..=1.0).contains(&m2) {
                        return 0.0;
                    }
                    prod *= m2;
                    c2 += m2;
                }
                // Lebesgue density of c over the FS density in the chart.
                (1.0 + c2).powi(k + 1) / (lebesgue_norm * prod * fs_norm)
            })
            .sum::<f64>()
            / self.witnesses.len() as f64;
        (1.0 - NEAR_SHARE) + NEAR_SHARE * near
    }
}

/// Orthonormal frame of `w^⊥` built from the standard basis vectors other
/// than the one at the largest coordinate of `w`.
fn chart_frame(w: &[Complex64]) -> Vec<Point> {
    let big = crate::geometry::argmax_abs(w);
    let mut vs = vec![w.to_vec()];
    for j in (0..w.len()).filter(|&j| j != big) {
        let mut e = vec![Complex64::new(0.0, 0.0); w.len()];
        e[j] = Complex64::new(1.0, 0.0);
        vs.push(e);
    }
    crate::geometry::orthonormalize(&vs).split_off(1)
}

/// Share of draws taken as `f^{-1}(y)` when the inverse is known.
const PULLBACK_SHARE: f64 = 1.0 / 3.0;

fn density_draw<T: Real>(
    cv: &CompiledVector<T>,
    inverse: Option<&CompiledVector<T>>,
    i_plus: Option<&IndeterminacyData>,
    k: usize,
    q: usize,
    bits: u32,
    rng: &mut ChaCha8Rng,
) -> Option<(f64, usize)> {
    let norm = binomial(k, q);
    let proposal = Proposal::new(i_plus.map(|d| d.witnesses.as_slice()).unwrap_or(&[]), k);
    let pull = if inverse.is_some() { PULLBACK_SHARE } else { 0.0 };
    for attempt in 0..MAX_ATTEMPTS {
        let z = match inverse {
            Some(g) if rng.random_range(0.0..1.0) < pull => {
                let y = fs_uniform(k, rng);
                match normalize(&crate::numeric::to_c64(&g.eval(&crate::numeric::to_cx::<T>(&y, bits)))) {
                    Some(z) => z,
                    None => continue,
                }
            }
            _ => proposal.sample(rng),
        };
        if i_plus.is_some_and(|d| !d.witnesses.is_empty() && d.distance(&z) < REJECTION_RADIUS) {
            continue;
        }
        match differential_from(cv, &z) {
            Ok(pd) if pd.norm_f >= MIN_IMAGE_NORM => {
                let value = elementary_symmetric(&pd.singular_values_sq, q) / norm;
                let jacobian = elementary_symmetric(&pd.singular_values_sq, k);
                let density = (1.0 - pull) * proposal.density(&z) + pull * jacobian;
                return Some((value / density, attempt));
            }
            _ => continue,
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicalDegree {
    pub q: usize,
    /// `λ_q(f^N)^{1/N}`.
    pub value: f64,
    pub table: Vec<DegreeEstimate>,
}

/// `λ_q(f^n)` for `n = 1..=N` and the root `λ_q(f^N)^{1/N}`. Exact for
/// `q = 1` and for `q = 0`; Monte Carlo on the composed `f^n` otherwise.
pub fn dynamical_degree(f: &RationalMap, q: usize, n_max: usize, samples_per_n: usize, seed: u64) -> Result<DynamicalDegree> {
    if n_max < 2 {
        return Err(Error::invalid("N must be at least 2"));
    }
    let mut table = Vec::with_capacity(n_max);
    if q <= 1 {
        let seq = degree_sequence(f, n_max)?;
        for (n, deg) in seq.entries {
            let value = if q == 0 { 1.0 } else { deg as f64 };
            table.push(DegreeEstimate {
                q,
                n,
                value,
                stderr: 0.0,
                samples: 0,
                seed,
                rejected: 0,
                rejection_radius: 0.0,
                beyond_s: false,
            });
        }
    } else {
        let mut fn_ = f.clone();
        for n in 1..=n_max {
            if n > 1 {
                fn_ = RationalMap::new(f.label.clone(), f.lift().compose_capped(fn_.lift(), DEFAULT_TERM_CAP)?)?;
            }
            let i_plus = if n == 1 { f.indeterminacy() } else { None };
            let seed_n = crate::stream::child_seed(seed, n as u64);
            table.push(lambda_q_with(&fn_, i_plus, None, q, samples_per_n, seed_n, Precision::DOUBLE, n)?);
        }
    }
    let last = table.last().expect("N >= 2");
    Ok(DynamicalDegree {
        q,
        value: last.value.powf(1.0 / n_max as f64),
        table,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitHit {
    /// `"forward"` for `f^n(I⁻)`, `"backward"` for `f^{-m}(I⁺)`.
    pub direction: String,
    pub step: usize,
    pub witness: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `min_distance[n][m]`: smallest FS distance between `f^n(I⁻)` and
    /// `f^{-m}(I⁺)` witness clouds.
    pub min_distance: Vec<Vec<f64>>,
    /// No distance at or below the collision threshold and no orbit hit.
    pub no_collision: bool,
    pub hit: Option<OrbitHit>,
}

pub const COLLISION_THRESHOLD: f64 = 1e-8;

fn push_cloud(f: &RationalMap, cloud: &[Point], steps: usize, direction: &str) -> (Vec<Vec<Point>>, Option<OrbitHit>) {
    let cv: CompiledVector<f64> = f.lift().compile(Precision::DOUBLE);
    let mut out = vec![cloud.to_vec()];
    for step in 1..=steps {
        let prev = out.last().expect("nonempty");
        let mut next = Vec::with_capacity(prev.len());
        for (witness, z) in prev.iter().enumerate() {
            let v: Vec<Complex64> = crate::numeric::to_c64(&cv.eval(&crate::numeric::to_cx::<f64>(z, 53)));
            match normalize(&v).filter(|_| crate::geometry::norm(&v) >= MIN_IMAGE_NORM) {
                Some(w) => next.push(w),
                None => {
                    return (
                        out,
                        Some(OrbitHit {
                            direction: direction.into(),
                            step,
                            witness,
                        }),
                    )
                }
            }
        }
        out.push(next);
    }
    (out, None)
}

/// Pushes the I⁻ witnesses forward and the I⁺ witnesses backward up to
/// `N` steps and records the closest approach of the two orbit clouds.
/// An orbit that lands exactly on an indeterminacy set is reported as a
/// collision.
pub fn stability_check(pair: &BirationalPair, n_max: usize) -> Result<StabilityReport> {
    let (ip, im) = match (pair.i_plus(), pair.i_minus()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::invalid("witnesses for both indeterminacy sets are required")),
    };
    if ip.witnesses.is_empty() || im.witnesses.is_empty() {
        return Ok(StabilityReport {
            min_distance: Vec::new(),
            no_collision: true,
            hit: None,
        });
    }
    let (fwd, hit_f) = push_cloud(&pair.forward, &im.witnesses, n_max, "forward");
    let (bwd, hit_b) = push_cloud(&pair.inverse, &ip.witnesses, n_max, "backward");
    let min_distance: Vec<Vec<f64>> = fwd
        .iter()
        .map(|a| {
            bwd.iter()
                .map(|b| {
                    a.iter()
                        .flat_map(|x| b.iter().map(move |y| fs_distance(x, y)))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        })
        .collect();
    let hit = hit_f.or(hit_b);
    let close = min_distance.iter().flatten().any(|d| *d <= COLLISION_THRESHOLD);
    Ok(StabilityReport {
        min_distance,
        no_collision: hit.is_none() && !close,
        hit,
    })
}
