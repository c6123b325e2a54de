use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fs_distance, Point};
use crate::maps::{AnalyticConstants, RationalMap};
use crate::measures::{orbit, Observable, WeightedCloud};
use crate::numeric::Precision;
use crate::poly::CompiledVector;
use crate::stream::{chunk_rng, par_map};

/// Radii of the dynamical balls: `η(x) = (d(x, I) / K)^p` and, for blocks
/// of `m` steps, `ρ(x) = (prod_{i<m} d(f^i x, I) / K^m)^p`. Holomorphic
/// maps use `d(x, ∅) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusFunctions {
    pub k_const: f64,
    pub p: f64,
    pub m: usize,
    pub holomorphic: bool,
}

impl RadiusFunctions {
    pub fn new(k_const: f64, p: f64, m: usize, holomorphic: bool) -> Result<Self> {
        if !(k_const >= 1.0) || !(p > 0.0) || m == 0 {
            return Err(Error::invalid("radius functions need K >= 1, p > 0 and m >= 1"));
        }
        Ok(RadiusFunctions { k_const, p, m, holomorphic })
    }

    pub fn from_constants(c: &AnalyticConstants, m: usize) -> Result<Self> {
        Self::new(c.k, c.p, m, false)
    }

    /// `p = 2` with `K = sqrt 2`, so that `η ≡ 1/2`, half the diameter of
    /// P^k in the chordal metric.
    pub fn holomorphic_default() -> Self {
        RadiusFunctions {
            k_const: 2f64.sqrt(),
            p: 2.0,
            m: 1,
            holomorphic: true,
        }
    }

    fn dist(&self, f: &RationalMap, z: &[Complex64]) -> f64 {
        if self.holomorphic {
            return 1.0;
        }
        f.indeterminacy().map_or(1.0, |d| d.distance(z))
    }

    pub fn eta(&self, f: &RationalMap, z: &[Complex64]) -> f64 {
        (self.dist(f, z) / self.k_const).powf(self.p).min(1.0)
    }

    /// `ρ` at the start of an orbit segment of at least `m` points.
    pub fn rho(&self, f: &RationalMap, orbit: &[Point]) -> f64 {
        let prod: f64 = orbit[..self.m].iter().map(|z| self.dist(f, z) / self.k_const).product();
        prod.powf(self.p).min(1.0)
    }
}

/// Orbits of length `n` of every cloud point, reused across probes.
pub struct CloudOrbits {
    pub n: usize,
    pub orbits: Vec<Option<Vec<Point>>>,
    pub weights: Vec<f64>,
}

impl CloudOrbits {
    pub fn new(f: &RationalMap, cloud: &WeightedCloud, n: usize) -> Self {
        let cv: CompiledVector<f64> = f.lift().compile(Precision::DOUBLE);
        let orbits = par_map(&cloud.points, |_, z| if n == 0 { Some(Vec::new()) } else { orbit(&cv, z, n) });
        CloudOrbits {
            n,
            orbits,
            weights: cloud.weights.clone(),
        }
    }

    /// Per-step radii along the orbit of a probe: `ρ` at block starts,
    /// no condition inside a block, `η` on the remainder.
    fn radii(&self, f: &RationalMap, x: &[Point], radii: &RadiusFunctions) -> Vec<Option<f64>> {
        let n = self.n;
        let m = radii.m;
        let blocks = if m > 1 { n / m } else { 0 };
        (0..n)
            .map(|i| {
                if i < blocks * m {
                    (i % m == 0).then(|| radii.rho(f, &x[i..]))
                } else {
                    Some(radii.eta(f, &x[i]))
                }
            })
            .collect()
    }

    /// Weighted fraction of cloud points in the dynamical ball of the probe
    /// orbit `x`. Points whose own orbit failed count as outside.
    pub fn ball_mass(&self, f: &RationalMap, x: &[Point], radii: &RadiusFunctions, scale: f64) -> f64 {
        let r = self.radii(f, x, radii);
        self.orbits
            .iter()
            .zip(&self.weights)
            .filter(|(o, _)| {
                o.as_ref().is_some_and(|o| {
                    r.iter()
                        .enumerate()
                        .all(|(i, ri)| ri.is_none_or(|ri| fs_distance(&x[i], &o[i]) <= scale * ri))
                })
            })
            .map(|(_, w)| w)
            .sum()
    }
}

/// Weighted fraction of the cloud within the dynamical ball `B_n(x)`.
pub fn dynamical_ball_mass(f: &RationalMap, cloud: &WeightedCloud, x: &[Complex64], n: usize, radii: &RadiusFunctions) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    let cv: CompiledVector<f64> = f.lift().compile(Precision::DOUBLE);
    let probe = orbit(&cv, x, n).ok_or(Error::AtIndeterminacy)?;
    Ok(CloudOrbits::new(f, cloud, n).ball_mass(f, &probe, radii, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodPoints {
    /// Indices into the cloud.
    pub indices: Vec<usize>,
    pub retained_mass: f64,
    /// Binomial standard error of the retained mass, using the cloud's
    /// effective sample size.
    pub stderr: f64,
    pub threshold: f64,
}

/// Keeps the points with `(1/n) sum_{i<n} log d(f^i x, I) >= -C_0 L`, using
/// the `log_alg_dist` proxy. Points whose orbit fails are dropped.
pub fn good_points_filter(cloud: &WeightedCloud, f: &RationalMap, n: usize, c0: f64, big_l: f64) -> Result<GoodPoints> {
    if !(c0 > 1.0) || !(big_l >= 0.0) {
        return Err(Error::invalid("need C0 > 1 and L >= 0"));
    }
    let threshold = -c0 * big_l;
    let obs = Observable::parse("log_alg_dist", Some(f))?;
    let cv: CompiledVector<f64> = f.lift().compile(Precision::DOUBLE);
    let len = n.max(1);
    let keep: Vec<bool> = par_map(&cloud.points, |_, z| {
        orbit(&cv, z, len).is_some_and(|o| o.iter().map(|p| obs.eval(p)).sum::<f64>() / len as f64 >= threshold)
    });
    let indices: Vec<usize> = (0..cloud.len()).filter(|&i| keep[i]).collect();
    let retained_mass: f64 = indices.iter().map(|&i| cloud.weights[i]).sum::<f64>().clamp(0.0, 1.0);
    let stderr = (retained_mass * (1.0 - retained_mass) / cloud.meta.ess.max(1.0)).sqrt();
    Ok(GoodPoints {
        indices,
        retained_mass,
        stderr,
        threshold,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyMethod {
    DynamicalBall,
    SeparatedSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    /// Asymptotic standard error of the median, `1.2533 s / sqrt(N)`.
    pub stderr: f64,
    pub method: EntropyMethod,
    pub n: usize,
    pub m: usize,
    pub c0: f64,
    pub big_l: f64,
    pub good_fraction: f64,
    pub probes: usize,
    /// `log λ_l(f^n) / n`, from the cloud normalizer when present.
    pub reference: f64,
    /// Per-probe values `-(1/n) log ν(B_n(x))`.
    pub samples: Vec<f64>,
}

/// Median over probes of `-(1/n) log` of the dynamical-ball mass. Probes
/// are resampled from the good points with probability proportional to
/// weight.
#[allow(clippy::too_many_arguments)]
pub fn entropy_lower_estimate(
    f: &RationalMap,
    l: usize,
    n: usize,
    cloud_nu: &WeightedCloud,
    radii: &RadiusFunctions,
    c0: f64,
    big_l: f64,
    probe_count: usize,
    seed: u64,
) -> Result<EntropyEstimate> {
    if n == 0 || probe_count == 0 {
        return Err(Error::invalid("n and probe_count must be positive"));
    }
    let good = good_points_filter(cloud_nu, f, n, c0, big_l)?;
    let orbits = CloudOrbits::new(f, cloud_nu, n);
    let usable: Vec<usize> = good.indices.iter().copied().filter(|&i| orbits.orbits[i].is_some()).collect();
    if usable.is_empty() {
        return Err(Error::InsufficientProbes { found: 0, required: 1 });
    }
    let mut cdf = Vec::with_capacity(usable.len());
    let mut acc = 0.0;
    for &i in &usable {
        acc += cloud_nu.weights[i];
        cdf.push(acc);
    }
    let mut rng = chunk_rng(seed, 0);
    let probes: Vec<usize> = (0..probe_count)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            usable[cdf.partition_point(|c| *c < u).min(usable.len() - 1)]
        })
        .collect();
    let mut samples: Vec<f64> = par_map(&probes, |_, &i| {
        let x = orbits.orbits[i].as_ref().expect("usable probe");
        -orbits.ball_mass(f, x, radii, 1.0).ln() / n as f64
    });
    let raw = samples.clone();
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mid = samples.len() / 2;
    let value = if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        0.5 * (samples[mid - 1] + samples[mid])
    };
    let (_, se_mean) = crate::stats::mean_stderr(raw.iter().copied());
    let reference = match cloud_nu.meta.normalizer {
        Some(lam) if lam > 0.0 && cloud_nu.meta.n == n => lam.ln() / n as f64,
        _ => l as f64 * (f.degree() as f64).ln(),
    };
    Ok(EntropyEstimate {
        value,
        stderr: 1.2533 * se_mean,
        method: EntropyMethod::DynamicalBall,
        n,
        m: radii.m,
        c0,
        big_l,
        good_fraction: good.retained_mass,
        probes: probe_count,
        reference,
        samples: raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::catalog;
    use crate::measures::Coding;

    #[test]
    fn zero_steps_is_the_whole_space() {
        let f = catalog::power_map(1, 2).unwrap();
        let cloud = Coding::Circle { k: 1, d: 2 }.cloud("p", 100, 1).unwrap();
        let r = RadiusFunctions::holomorphic_default();
        assert_eq!(dynamical_ball_mass(&f, &cloud, &cloud.points[0], 0, &r).unwrap(), 1.0);
    }

    #[test]
    fn diameter_radius_captures_everything() {
        // η = 1 is the chordal diameter.
        let f = catalog::power_map(1, 2).unwrap();
        let cloud = Coding::Circle { k: 1, d: 2 }.cloud("p", 200, 2).unwrap();
        let r = RadiusFunctions::new(1.0, 2.0, 1, true).unwrap();
        let m = dynamical_ball_mass(&f, &cloud, &cloud.points[3], 6, &r).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ball_mass_is_monotone() {
        let f = catalog::power_map(1, 2).unwrap();
        let cloud = Coding::Circle { k: 1, d: 2 }.cloud("p", 5000, 3).unwrap();
        let r = RadiusFunctions::holomorphic_default();
        let orbits = CloudOrbits::new(&f, &cloud, 8);
        let probe = orbits.orbits[0].clone().unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=8 {
            let sub = CloudOrbits {
                n,
                orbits: orbits.orbits.iter().map(|o| o.as_ref().map(|o| o[..n].to_vec())).collect(),
                weights: orbits.weights.clone(),
            };
            let m = sub.ball_mass(&f, &probe[..n], &r, 1.0);
            assert!(m <= prev);
            prev = m;
        }
        let small = orbits.ball_mass(&f, &probe, &r, 0.5);
        let large = orbits.ball_mass(&f, &probe, &r, 1.0);
        assert!(small <= large);
    }

    #[test]
    fn doubling_ball_mass_halves_per_step() {
        // On the circle a chordal ball of radius 1/2 is an arc of length
        // 2π/3, and each further step halves it.
        let f = catalog::power_map(1, 2).unwrap();
        let cloud = Coding::Circle { k: 1, d: 2 }.cloud("p", 100_000, 4).unwrap();
        let r = RadiusFunctions::holomorphic_default();
        let orbits = CloudOrbits::new(&f, &cloud, 4);
        let probe = orbits.orbits[7].clone().unwrap();
        let m = orbits.ball_mass(&f, &probe, &r, 1.0);
        let exact = (1.0 / 3.0) / 8.0;
        assert!((m - exact).abs() < 4.0 * (exact / 100_000.0).sqrt(), "{m} vs {exact}");
    }

    #[test]
    fn holomorphic_maps_keep_every_point() {
        let f = catalog::power_map(1, 2).unwrap();
        let cloud = Coding::Circle { k: 1, d: 2 }.cloud("p", 500, 5).unwrap();
        let g = good_points_filter(&cloud, &f, 5, 10.0, 0.5).unwrap();
        assert_eq!(g.indices.len(), 500);
        assert!((g.retained_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn filter_is_monotone_in_c0() {
        let f = catalog::henon_default().forward;
        let cloud = crate::measures::sample_mu_n(&f, 1, 3, 300, 6).unwrap();
        let mut prev = 0.0;
        for c0 in [1.01, 1.5, 2.0, 5.0, 10.0] {
            let g = good_points_filter(&cloud, &f, 3, c0, 0.65).unwrap();
            assert!(g.retained_mass >= prev);
            prev = g.retained_mass;
        }
    }

    #[test]
    fn doubling_entropy_is_near_log_two() {
        let f = catalog::power_map(1, 2).unwrap();
        let cloud = Coding::Circle { k: 1, d: 2 }.cloud("p", 20_000, 7).unwrap();
        let r = RadiusFunctions::holomorphic_default();
        let e = entropy_lower_estimate(&f, 1, 6, &cloud, &r, 10.0, 0.0, 100, 8).unwrap();
        assert!((e.value - 2f64.ln()).abs() < 0.15, "{}", e.value);
        assert!((e.reference - 2f64.ln()).abs() < 1e-12);
    }
}
