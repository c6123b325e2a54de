use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::differential::{binomial, chained, elementary_symmetric, singular_values_sq, to_dmatrix};
use crate::degrees::{Proposal, REJECTION_RADIUS};
use crate::error::{Error, Result};
use crate::geometry::{fs_uniform, Point};
use crate::maps::RationalMap;
use crate::numeric::{to_cx, Precision};
use crate::poly::CompiledVector;
use crate::potentials::push_point;
use crate::stats::{mean_stderr, weighted_jackknife};
use crate::stream::par_indexed;

const MAX_ATTEMPTS: usize = 10_000;

/// `M` FS-uniform points.
pub fn fs_uniform_sample(k: usize, m: usize, seed: u64) -> Result<Vec<Point>> {
    if m == 0 {
        return Err(Error::invalid("M must be at least 1"));
    }
    Ok(par_indexed(seed, m, |_, rng| fs_uniform(k, rng)))
}

/// Equal-weight cloud of `M` FS-uniform points, `ν_0` for any map.
pub fn fs_uniform_cloud(label: &str, k: usize, m: usize, seed: u64) -> Result<WeightedCloud> {
    let meta = CloudMeta {
        label: label.into(),
        l: 0,
        n: 0,
        m,
        seed,
        estimator: "fs-uniform".into(),
        normalizer: None,
        normalizer_stderr: None,
        dropped_mass: 0.0,
        ess: 0.0,
    };
    WeightedCloud::equal(fs_uniform_sample(k, m, seed)?, meta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudMeta {
    pub label: String,
    pub l: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// `fs-uniform`, `nu-importance`, `nu-crofton`, `mu-cesaro`, or a coding
    /// name.
    pub estimator: String,
    /// Mean raw importance weight, an estimate of `λ_l(f^n)`.
    pub normalizer: Option<f64>,
    pub normalizer_stderr: Option<f64>,
    /// Mass removed because an orbit reached the sentinel.
    pub dropped_mass: f64,
    /// Effective sample size `1 / sum w^2`.
    pub ess: f64,
}

/// Points with self-normalized weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedCloud {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub meta: CloudMeta,
}

impl WeightedCloud {
    /// Normalizes `raw` and fills in the effective sample size.
    pub fn new(points: Vec<Point>, raw: Vec<f64>, mut meta: CloudMeta) -> Result<Self> {
        if points.len() != raw.len() {
            return Err(Error::invalid("points and weights differ in length"));
        }
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::AllSamplesRejected);
        }
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        meta.ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        Ok(WeightedCloud { points, weights, meta })
    }

    pub fn equal(points: Vec<Point>, meta: CloudMeta) -> Result<Self> {
        let raw = vec![1.0; points.len()];
        Self::new(points, raw, meta)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn k(&self) -> usize {
        self.points.first().map_or(0, |p| p.len() - 1)
    }
}

fn meta(f: &RationalMap, l: usize, n: usize, m: usize, seed: u64, estimator: &str) -> CloudMeta {
    CloudMeta {
        label: f.label.clone(),
        l,
        n,
        m,
        seed,
        estimator: estimator.into(),
        normalizer: None,
        normalizer_stderr: None,
        dropped_mass: 0.0,
        ess: 0.0,
    }
}

/// How [`sample_nu_n_with`] draws `ν_n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NuMethod {
    /// `Crofton` for `l = 1` on maps with indeterminacy, `Importance`
    /// otherwise.
    #[default]
    Auto,
    Importance,
    /// Exact draws for `l = 1`: a uniform root of `<h, F^n>` on a random
    /// line, for a random hyperplane `h`.
    Crofton,
}

impl NuMethod {
    fn resolve(self, f: &RationalMap, l: usize) -> NuMethod {
        match self {
            NuMethod::Auto if l == 1 && !f.is_holomorphic() => NuMethod::Crofton,
            NuMethod::Auto => NuMethod::Importance,
            m => m,
        }
    }
}

/// Sample of `ν_n = (f^n)^*ω^l ∧ ω^{k-l} / λ_l(f^n)` by [`NuMethod::Auto`].
pub fn sample_nu_n(f: &RationalMap, l: usize, n: usize, m: usize, seed: u64) -> Result<WeightedCloud> {
    sample_nu_n_with(f, l, n, m, seed, NuMethod::Auto)
}

pub fn sample_nu_n_with(f: &RationalMap, l: usize, n: usize, m: usize, seed: u64, method: NuMethod) -> Result<WeightedCloud> {
    let k = f.k();
    if l > k {
        return Err(Error::invalid(format!("l must lie in [0, {k}]")));
    }
    if m == 0 {
        return Err(Error::invalid("M must be at least 1"));
    }
    match method.resolve(f, l) {
        NuMethod::Crofton if l != 1 => Err(Error::invalid("the Crofton sampler needs l = 1")),
        NuMethod::Crofton => nu_crofton(f, n, m, seed),
        _ => nu_importance(f, l, n, m, seed),
    }
}

/// Raw weights are `e_l(a) / C(k,l)` over the proposal density, with `a` the
/// squared singular values of the chained differential of `f^n`. The
/// proposal is FS-uniform, mixed with draws near the I⁺ witnesses when
/// these are known; draws within [`REJECTION_RADIUS`] of I⁺ are redrawn.
fn nu_importance(f: &RationalMap, l: usize, n: usize, m: usize, seed: u64) -> Result<WeightedCloud> {
    let k = f.k();
    let cv: CompiledVector<f64> = f.lift().compile(Precision::DOUBLE);
    let i_plus = f.indeterminacy().filter(|d| !d.witnesses.is_empty());
    let proposal = Proposal::new(i_plus.map(|d| d.witnesses.as_slice()).unwrap_or(&[]), k);
    let c = binomial(k, l);
    let draws: Vec<Option<(Point, f64)>> = par_indexed(seed, m, |_, rng| {
        for _ in 0..MAX_ATTEMPTS {
            let z = proposal.sample(rng);
            if i_plus.is_some_and(|d| d.distance(&z) < REJECTION_RADIUS) {
                continue;
            }
            let Some((_, acc)) = chained(&cv, &to_cx::<f64>(&z, 53), n) else {
                continue;
            };
            let a = singular_values_sq(&to_dmatrix(&acc));
            let w = elementary_symmetric(&a, l) / c / proposal.density(&z);
            if w.is_finite() {
                return Some((z, w));
            }
        }
        None
    });
    let (points, raw): (Vec<Point>, Vec<f64>) = draws
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or(Error::AllSamplesRejected)?
        .into_iter()
        .unzip();
    let (norm, se) = mean_stderr(raw.iter().copied());
    let mut meta = meta(f, l, n, m, seed, "nu-importance");
    meta.normalizer = Some(norm);
    meta.normalizer_stderr = Some(se);
    WeightedCloud::new(points, raw, meta)
}

/// Equal weights. The normalizer is `deg(F)^n` times the share of slices
/// whose chosen root is genuine, which estimates `λ_1(f^n)` and equals
/// it exactly when the iterated lift is reduced.
fn nu_crofton(f: &RationalMap, n: usize, m: usize, seed: u64) -> Result<WeightedCloud> {
    let lift = super::crofton::FastLift::new(f.lift());
    let draws = par_indexed(seed, m, |_, rng| super::crofton::draw(&lift, n, rng));
    let draws: Vec<_> = draws.into_iter().collect::<Option<_>>().ok_or(Error::AllSamplesRejected)?;
    let spurious: usize = draws.iter().map(|d| d.spurious).sum();
    let genuine = draws.len() as f64 / (draws.len() + spurious) as f64;
    let degree = (f.degree() as f64).powi(n as i32);
    let mut meta = meta(f, 1, n, m, seed, "nu-crofton");
    meta.normalizer = Some(degree * genuine);
    meta.normalizer_stderr = Some(degree * (genuine * (1.0 - genuine) / (draws.len() + spurious) as f64).sqrt());
    WeightedCloud::equal(draws.into_iter().map(|d| d.point).collect(), meta)
}

/// Cesàro cloud `μ_n = (1/n) sum_{i<n} f^i_* ν_n`. Each `ν_n` point
/// contributes its first `n` orbit points with weight `w/n`; a point whose
/// orbit fails loses all of its mass, which is reported in the meta.
pub fn sample_mu_n(f: &RationalMap, l: usize, n: usize, m: usize, seed: u64) -> Result<WeightedCloud> {
    sample_mu_n_with(f, l, n, m, seed, NuMethod::Auto)
}

pub fn sample_mu_n_with(f: &RationalMap, l: usize, n: usize, m: usize, seed: u64, method: NuMethod) -> Result<WeightedCloud> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let nu = sample_nu_n_with(f, l, n, m, seed, method)?;
    let cv: CompiledVector<f64> = f.lift().compile(Precision::DOUBLE);
    let orbits: Vec<Option<Vec<Point>>> = crate::stream::par_map(&nu.points, |_, z| orbit(&cv, z, n));
    let mut points = Vec::with_capacity(m * n);
    let mut raw = Vec::with_capacity(m * n);
    let mut dropped = 0.0;
    for (orb, w) in orbits.into_iter().zip(&nu.weights) {
        match orb {
            Some(o) => {
                for p in o {
                    points.push(p);
                    raw.push(w / n as f64);
                }
            }
            None => dropped += w,
        }
    }
    let mut meta = nu.meta.clone();
    meta.estimator = "mu-cesaro".into();
    meta.dropped_mass = dropped;
    WeightedCloud::new(points, raw, meta)
}

/// `z, f(z), ..., f^{len-1}(z)`; `None` when the orbit fails.
pub fn orbit(cv: &CompiledVector<f64>, z: &[Complex64], len: usize) -> Option<Vec<Point>> {
    let mut out = Vec::with_capacity(len);
    let mut cur = z.to_vec();
    for i in 0..len {
        if i > 0 {
            cur = push_point(cv, &cur)?;
        }
        out.push(cur.clone());
    }
    Some(out)
}

/// `sum w_i obs(x_i)` with a jackknife standard error. A `-inf` value
/// carrying positive mass makes the integral `-inf`.
pub fn empirical_integral<F>(cloud: &WeightedCloud, obs: F) -> Result<(f64, f64)>
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    let values: Vec<f64> = crate::stream::par_map(&cloud.points, |_, z| obs(z));
    let mut finite_v = Vec::with_capacity(values.len());
    let mut finite_w = Vec::with_capacity(values.len());
    let mut neg_inf = false;
    for (v, w) in values.iter().zip(&cloud.weights) {
        if v.is_finite() {
            finite_v.push(*v);
            finite_w.push(*w);
        } else if *w > 0.0 {
            if *v == f64::NEG_INFINITY {
                neg_inf = true;
            } else {
                return Err(Error::invalid(format!("observable returned {v}")));
            }
        }
    }
    if finite_w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::AllSentinel);
    }
    if neg_inf {
        return Ok((f64::NEG_INFINITY, f64::INFINITY));
    }
    // Weights sum to 1, so the finite part is not renormalized.
    let (mean, se) = weighted_jackknife(&finite_v, &finite_w);
    let mass: f64 = finite_w.iter().sum();
    Ok((mean * mass, se * mass))
}
