use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{IndeterminacyData, RationalMap};
use crate::error::{Error, Result};
use crate::geometry::{fs_uniform, normalize, Point};
use crate::measures::differential_from;
use crate::numeric::Precision;
use crate::poly::CompiledVector;

/// Constants with `|Df(x)| <= K d(x, I)^{-p}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConstants {
    pub k: f64,
    pub p: f64,
    /// Envelope slope and intercept before clamping and inflation.
    pub fit_slope: f64,
    pub fit_intercept: f64,
    /// Fraction of holdout points satisfying the inequality.
    pub holdout_pass: f64,
    pub samples: usize,
}

fn op_norm(cv: &CompiledVector<f64>, z: &[num_complex::Complex64]) -> Option<f64> {
    differential_from(cv, z)
        .ok()
        .map(|d| d.singular_values_sq.first().copied().unwrap_or(0.0).sqrt())
}

/// Smallest distance to the locus used for fitting and checking.
pub const MIN_CALIBRATION_DISTANCE: f64 = 1e-6;

/// Perturbation of a random witness with an independent log-uniform scale
/// in `10^{-12}..1` per coordinate, so that anisotropic approaches to the
/// locus are sampled too.
fn near_locus(data: &IndeterminacyData, k: usize, rng: &mut ChaCha8Rng) -> Point {
    let w = &data.witnesses[rng.random_range(0..data.witnesses.len())];
    let g = fs_uniform(k, rng);
    let z: Point = w.iter().zip(&g).map(|(a, b)| a + b * 10f64.powf(-rng.random_range(0.0..12.0))).collect();
    normalize(&z).unwrap_or_else(|| w.clone())
}

/// Least squares through the per-bin maxima of `y`, bins of width 1/2 in `x`.
fn envelope_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let mut bins: std::collections::BTreeMap<i64, (f64, f64, usize)> = Default::default();
    for &(x, y) in pts {
        let e = bins.entry((x * 2.0).floor() as i64).or_insert((x, f64::NEG_INFINITY, 0));
        if y > e.1 {
            *e = (x, y, e.2);
        }
        e.2 += 1;
    }
    let top: Vec<(f64, f64)> = bins.values().filter(|b| b.2 >= 5).map(|b| (b.0, b.1)).collect();
    let top = if top.len() >= 2 { top } else { pts.to_vec() };
    let m = top.len() as f64;
    let mx = top.iter().map(|p| p.0).sum::<f64>() / m;
    let my = top.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = top.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = top.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Fits `(K, p)` near the indeterminacy locus and checks the inequality on
/// a fresh sample. Slope `p` is the least-squares fit of the upper envelope
/// of `log|Df|` against `-log d(x, I)`; `K` is then twice the smallest
/// constant that makes the inequality hold on the calibration sample.
pub fn calibrate_constants(f: &RationalMap, data: &IndeterminacyData, samples: usize, seed: u64) -> Result<AnalyticConstants> {
    if samples < 100 {
        return Err(Error::invalid("calibration needs at least 100 samples"));
    }
    let k = f.k();
    let cv: CompiledVector<f64> = f.lift().compile(Precision::DOUBLE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if data.is_empty() || data.witnesses.is_empty() {
        let mut sup: f64 = 0.0;
        for _ in 0..samples {
            let z = fs_uniform(k, &mut rng);
            if let Some(n) = op_norm(&cv, &z) {
                sup = sup.max(n);
            }
        }
        return Ok(AnalyticConstants {
            k: sup,
            p: 0.0,
            fit_slope: 0.0,
            fit_intercept: sup.ln(),
            holdout_pass: 1.0,
            samples,
        });
    }
    let draw = |rng: &mut ChaCha8Rng| -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(samples);
        while out.len() < samples {
            // Half near the locus, half global.
            let z = if out.len() % 2 == 0 {
                near_locus(data, k, rng)
            } else {
                fs_uniform(k, rng)
            };
            let dist = data.distance(&z);
            if dist < MIN_CALIBRATION_DISTANCE {
                continue;
            }
            if let Some(n) = op_norm(&cv, &z) {
                if n > 0.0 {
                    out.push((-dist.ln(), n.ln()));
                }
            }
        }
        out
    };
    let train = draw(&mut rng);
    let (slope, intercept) = envelope_fit(&train);
    let p = slope.max(0.0);
    let log_k = train.iter().map(|(x, y)| y - p * x).fold(f64::NEG_INFINITY, f64::max) + 2f64.ln();
    let holdout = draw(&mut rng);
    let pass = holdout.iter().filter(|(x, y)| *y <= log_k + p * x).count() as f64 / holdout.len() as f64;
    Ok(AnalyticConstants {
        k: log_k.exp(),
        p,
        fit_slope: slope,
        fit_intercept: intercept,
        holdout_pass: pass,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::super::catalog;
    use super::*;

    #[test]
    fn holomorphic_maps_get_zero_exponent() {
        let f = catalog::power_map(1, 2).unwrap();
        let c = calibrate_constants(&f, f.indeterminacy().unwrap(), 200, 1).unwrap();
        assert_eq!(c.p, 0.0);
        assert!(c.k > 0.0);
    }

    #[test]
    fn linear_map_bound_is_operator_norm() {
        let f = catalog::linear_diag().forward;
        let c = calibrate_constants(&f, f.indeterminacy().unwrap(), 500, 2).unwrap();
        assert_eq!(c.p, 0.0);
        // FS norm of diag(4,2,1) never exceeds the ratio of extreme entries.
        assert!(c.k <= 4.0 + 1e-9);
    }

    #[test]
    fn henon_inequality_holds_on_holdout() {
        let pair = catalog::henon_default();
        let data = super::super::indeterminacy_witnesses(&pair.forward, 8, 3).unwrap();
        let c = calibrate_constants(&pair.forward, &data, 2000, 4).unwrap();
        assert!(c.p > 0.5 && c.p < 3.0, "p = {}", c.p);
        assert!(c.holdout_pass > 0.99, "pass = {}", c.holdout_pass);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let f = catalog::power_map(1, 2).unwrap();
        assert!(calibrate_constants(&f, f.indeterminacy().unwrap(), 10, 0).is_err());
    }
}
