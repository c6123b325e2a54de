use serde::{Deserialize, Serialize};

use super::observable::Observable;
use super::sampling::{orbit, sample_mu_n, WeightedCloud};
use crate::error::{Error, Result};
use crate::maps::RationalMap;
use crate::numeric::Precision;
use crate::poly::CompiledVector;
use crate::stats::linear_fit;
use crate::stream::{child_seed, par_map};

/// Default Cauchy tolerance of [`hypothesis_h_check`].
pub const H_TOLERANCE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HEntry {
    pub n: usize,
    /// `I_n = ∫ log d(x, I) dμ_n`, with the `log_alg_dist` proxy.
    pub value: f64,
    pub stderr: f64,
    pub dropped_mass: f64,
    pub estimator: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HCheck {
    pub label: String,
    pub l: usize,
    pub entries: Vec<HEntry>,
    pub tolerance: f64,
    /// Largest minus smallest of the last three values.
    pub tail_oscillation: f64,
    /// Fitted slope of `I_n` against `n`.
    pub slope: f64,
    pub verdict: Verdict,
}

/// Evaluates `I_n` on `μ_n` clouds for each `n` in `n_list`.
///
/// The verdict is `PASS` when every value is finite and the last three
/// spread by less than `tolerance`, `FAIL` when a value is `-inf` or the
/// fitted drift over the tested range falls by more than `tolerance`, and
/// `INCONCLUSIVE` otherwise. Holomorphic maps have `I_n = 0` by the
/// convention `d(x, ∅) = 1` and are not sampled.
pub fn hypothesis_h_check(f: &RationalMap, l: usize, n_list: &[usize], m: usize, seed: u64, tolerance: f64) -> Result<HCheck> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::invalid("n_list must be positive and strictly increasing"));
    }
    let entries = if f.is_holomorphic() {
        n_list
            .iter()
            .map(|&n| HEntry {
                n,
                value: 0.0,
                stderr: 0.0,
                dropped_mass: 0.0,
                estimator: "holomorphic".into(),
            })
            .collect()
    } else {
        let obs = Observable::parse("log_alg_dist", Some(f))?;
        let mut out = Vec::with_capacity(n_list.len());
        for &n in n_list {
            let cloud = sample_mu_n(f, l, n, m, child_seed(seed, n as u64))?;
            let (value, stderr) = super::sampling::empirical_integral(&cloud, |z| obs.eval(z))?;
            out.push(HEntry {
                n,
                value,
                stderr,
                dropped_mass: cloud.meta.dropped_mass,
                estimator: cloud.meta.estimator,
            });
        }
        out
    };
    Ok(verdict(f, l, entries, tolerance))
}

fn verdict(f: &RationalMap, l: usize, entries: Vec<HEntry>, tolerance: f64) -> HCheck {
    let values: Vec<f64> = entries.iter().map(|e| e.value).collect();
    let tail = &values[values.len().saturating_sub(3)..];
    let tail_oscillation = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let all_finite = values.iter().all(|v| v.is_finite());
    let (slope, span) = if all_finite && values.len() >= 2 {
        let ns: Vec<f64> = entries.iter().map(|e| e.n as f64).collect();
        (linear_fit(&ns, &values).0, ns[ns.len() - 1] - ns[0])
    } else {
        (0.0, 0.0)
    };
    let verdict = if !all_finite && values.contains(&f64::NEG_INFINITY) {
        Verdict::Fail
    } else if !all_finite {
        Verdict::Inconclusive
    } else if tail.len() == 3 && tail_oscillation < tolerance {
        Verdict::Pass
    } else if slope * span < -tolerance {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    HCheck {
        label: f.label.clone(),
        l,
        entries,
        tolerance,
        tail_oscillation,
        slope,
        verdict,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTrace {
    pub phi: String,
    pub psi: String,
    /// `C_n = ∫ φ∘f^n ψ dμ - ∫ φ dμ ∫ ψ dμ` for `n = 0..=n_max`.
    pub c: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Mass of cloud points whose orbit failed before step `n`.
    pub dropped_mass: Vec<f64>,
}

impl CorrelationTrace {
    /// First `n >= 1` from which every `|C_j|` stays within `z` standard
    /// errors.
    pub fn decay_index(&self, z: f64) -> Option<usize> {
        let ok: Vec<bool> = self.c.iter().zip(&self.stderr).map(|(c, s)| c.abs() <= z * s).collect();
        (1..ok.len()).find(|&n| ok[n..].iter().all(|b| *b))
    }
}

/// Correlations of `φ` and `ψ` along the pushed cloud. At each `n` only
/// points whose orbit reached step `n` enter, with their weights
/// renormalized; the standard error uses the influence function of the
/// covariance, `(φ_n - Eφ_n)(ψ - Eψ) - C_n`.
pub fn correlation(f: &RationalMap, cloud: &WeightedCloud, phi: &Observable, psi: &Observable, n_max: usize) -> Result<CorrelationTrace> {
    if cloud.is_empty() {
        return Err(Error::invalid("empty cloud"));
    }
    let cv: CompiledVector<f64> = f.lift().compile(Precision::DOUBLE);
    let orbits: Vec<Vec<_>> = par_map(&cloud.points, |_, z| {
        let mut o = vec![z.clone()];
        for _ in 0..n_max {
            match orbit(&cv, o.last().expect("nonempty"), 2) {
                Some(mut next) => o.push(next.pop().expect("two points")),
                None => break,
            }
        }
        o
    });
    let psi_v: Vec<f64> = par_map(&cloud.points, |_, z| psi.eval(z));
    let mut trace = CorrelationTrace {
        phi: phi.name.clone(),
        psi: psi.name.clone(),
        c: vec![],
        stderr: vec![],
        dropped_mass: vec![],
    };
    for n in 0..=n_max {
        let mut w = Vec::new();
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut dropped = 0.0;
        for ((o, wi), yi) in orbits.iter().zip(&cloud.weights).zip(&psi_v) {
            match o.get(n) {
                Some(z) => {
                    w.push(*wi);
                    x.push(phi.eval(z));
                    y.push(*yi);
                }
                None => dropped += wi,
            }
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::AllSamplesRejected);
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("observables must be finite on the cloud"));
        }
        w.iter_mut().for_each(|v| *v /= total);
        let ex: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        let ey: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
        let c: f64 = w.iter().zip(x.iter().zip(&y)).map(|(a, (p, q))| a * (p - ex) * (q - ey)).sum();
        let var: f64 = w
            .iter()
            .zip(x.iter().zip(&y))
            .map(|(a, (p, q))| a * a * ((p - ex) * (q - ey) - c).powi(2))
            .sum();
        trace.c.push(c);
        trace.stderr.push(var.sqrt());
        trace.dropped_mass.push(dropped);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::catalog;
    use crate::measures::Coding;

    #[test]
    fn holomorphic_maps_give_zero() {
        let f = catalog::power_map(2, 2).unwrap();
        let h = hypothesis_h_check(&f, 1, &[1, 2, 4], 10, 1, H_TOLERANCE).unwrap();
        assert!(h.entries.iter().all(|e| e.value == 0.0));
        assert_eq!(h.verdict, Verdict::Pass);
    }

    #[test]
    fn n_list_must_increase() {
        let f = catalog::power_map(1, 2).unwrap();
        assert!(hypothesis_h_check(&f, 1, &[2, 2], 10, 1, H_TOLERANCE).is_err());
        assert!(hypothesis_h_check(&f, 1, &[], 10, 1, H_TOLERANCE).is_err());
    }

    fn entries(values: &[f64]) -> Vec<HEntry> {
        values
            .iter()
            .enumerate()
            .map(|(i, &value)| HEntry {
                n: i + 1,
                value,
                stderr: 0.0,
                dropped_mass: 0.0,
                estimator: String::new(),
            })
            .collect()
    }

    #[test]
    fn verdict_rules() {
        let f = catalog::cremona().forward;
        assert_eq!(verdict(&f, 1, entries(&[-0.7, -0.65, -0.64, -0.645]), 0.1).verdict, Verdict::Pass);
        assert_eq!(verdict(&f, 1, entries(&[-1.0, -2.0, -3.0, -4.0]), 0.1).verdict, Verdict::Fail);
        assert_eq!(verdict(&f, 1, entries(&[-1.0, f64::NEG_INFINITY]), 0.1).verdict, Verdict::Fail);
        assert_eq!(verdict(&f, 1, entries(&[-1.0, -0.5, -1.0, -0.5]), 0.1).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn henon_values_stabilize() {
        let f = catalog::henon_default().forward;
        let h = hypothesis_h_check(&f, 1, &[2, 3, 4], 400, 3, H_TOLERANCE).unwrap();
        assert!(h.entries.iter().all(|e| e.value.is_finite() && e.value < 0.0));
        assert_eq!(h.entries[0].estimator, "mu-cesaro");
    }

    #[test]
    fn constant_observable_has_zero_correlation() {
        let f = catalog::power_map(1, 2).unwrap();
        let cloud = Coding::Circle { k: 1, d: 2 }.cloud("p", 2000, 1).unwrap();
        let one = Observable::parse("one", None).unwrap();
        let cos = Observable::parse("cos_arg", None).unwrap();
        let t = correlation(&f, &cloud, &one, &cos, 5).unwrap();
        assert!(t.c.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn doubling_characters_are_uncorrelated() {
        // cos(θ) and cos(2^n θ) are orthogonal for n >= 1; C_0 = 1/2.
        let f = catalog::power_map(1, 2).unwrap();
        let cloud = Coding::Circle { k: 1, d: 2 }.cloud("p", 20_000, 2).unwrap();
        let cos = Observable::parse("cos_arg", None).unwrap();
        let t = correlation(&f, &cloud, &cos, &cos, 8).unwrap();
        assert!((t.c[0] - 0.5).abs() < 3.0 * t.stderr[0]);
        for n in 1..=8 {
            assert!(t.c[n].abs() <= 3.0 * t.stderr[n], "n={n}: {} ± {}", t.c[n], t.stderr[n]);
        }
        assert_eq!(t.decay_index(3.0), Some(1));
    }
}
