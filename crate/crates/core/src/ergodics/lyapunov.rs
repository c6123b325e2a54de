use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::maps::RationalMap;
use crate::measures::{step, to_dmatrix, WeightedCloud};
use crate::numeric::{to_cx, Mp, Precision, Real};
use crate::poly::CompiledVector;
use crate::stats::mean_stderr;
use crate::stream::{chunk_rng, par_map};

/// Fewest surviving orbits for which exponents are reported.
pub const MIN_ORBITS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// `χ_1 >= ... >= χ_k`, nats per iteration, each complex direction
    /// counted once.
    pub exponents: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Per-orbit exponents, one row per surviving orbit.
    pub traces: Vec<Vec<f64>>,
    /// Mean over orbits of `(1/n) sum log|det D|`, computed from the
    /// determinants rather than from the QR factors.
    pub log_det: f64,
    pub log_det_stderr: f64,
    pub n_steps: usize,
    pub orbits: usize,
    pub dropped: usize,
    pub qr_period: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LyapunovOptions {
    /// Orbits started from the cloud.
    pub orbits: usize,
    /// Steps between re-orthonormalizations.
    pub qr_period: usize,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        LyapunovOptions { orbits: 200, qr_period: 1 }
    }
}

/// Running QR factorization of the cocycle along one orbit.
struct Cocycle {
    q: DMatrix<Complex64>,
    pending: DMatrix<Complex64>,
    since_qr: usize,
    period: usize,
    log_r: Vec<f64>,
    log_det: f64,
}

impl Cocycle {
    fn new(k: usize, period: usize) -> Self {
        Cocycle {
            q: DMatrix::identity(k, k),
            pending: DMatrix::identity(k, k),
            since_qr: 0,
            period,
            log_r: vec![0.0; k],
            log_det: 0.0,
        }
    }

    fn push(&mut self, d: DMatrix<Complex64>) {
        self.log_det += d.determinant().norm().ln();
        self.pending = d * &self.pending;
        self.since_qr += 1;
        if self.since_qr == self.period {
            self.flush();
        }
    }

    fn flush(&mut self) {
        if self.since_qr == 0 {
            return;
        }
        let m = &self.pending * &self.q;
        let qr = m.qr();
        let r = qr.r();
        for (i, acc) in self.log_r.iter_mut().enumerate() {
            *acc += r[(i, i)].norm().ln();
        }
        self.q = qr.q();
        self.pending = DMatrix::identity(self.q.nrows(), self.q.nrows());
        self.since_qr = 0;
    }

    fn finish(mut self, n: usize) -> (Vec<f64>, f64) {
        self.flush();
        let n = n as f64;
        (self.log_r.iter().map(|x| x / n).collect(), self.log_det / n)
    }
}

/// Exponents along `n_steps` of a pushed orbit from `z`; `None` if the
/// orbit fails or a factor degenerates.
fn pushed_orbit<T: Real>(cv: &CompiledVector<T>, z: &[Complex64], n_steps: usize, period: usize) -> Option<(Vec<f64>, f64)> {
    let k = z.len() - 1;
    let mut cur = to_cx::<T>(z, cv.prec());
    let mut co = Cocycle::new(k, period);
    for _ in 0..n_steps {
        let s = step(cv, &cur)?;
        co.push(to_dmatrix(&s.d));
        cur = s.image;
    }
    let (ex, ld) = co.finish(n_steps);
    (ex.iter().all(|x| x.is_finite()) && ld.is_finite()).then_some((ex, ld))
}

/// Exponents along a precomputed orbit, using the differential at each
/// recorded point.
fn coded_orbit(cv: &CompiledVector<f64>, orbit: &[Point], period: usize) -> Option<(Vec<f64>, f64)> {
    let k = orbit.first()?.len() - 1;
    let mut co = Cocycle::new(k, period);
    for z in orbit {
        let s = step(cv, &to_cx::<f64>(z, 53))?;
        co.push(to_dmatrix(&s.d));
    }
    let (ex, ld) = co.finish(orbit.len());
    (ex.iter().all(|x| x.is_finite()) && ld.is_finite()).then_some((ex, ld))
}

fn summarize(results: Vec<Option<(Vec<f64>, f64)>>, n_steps: usize, qr_period: usize, seed: u64) -> Result<LyapunovEstimate> {
    let dropped = results.iter().filter(|r| r.is_none()).count();
    let ok: Vec<(Vec<f64>, f64)> = results.into_iter().flatten().collect();
    if ok.len() < MIN_ORBITS {
        return Err(Error::TooFewOrbits {
            survivors: ok.len(),
            required: MIN_ORBITS,
        });
    }
    let k = ok[0].0.len();
    let mut exponents = Vec::with_capacity(k);
    let mut stderr = Vec::with_capacity(k);
    for i in 0..k {
        let (m, s) = mean_stderr(ok.iter().map(|r| r.0[i]));
        exponents.push(m);
        stderr.push(s);
    }
    let (log_det, log_det_stderr) = mean_stderr(ok.iter().map(|r| r.1));
    // QR diagonals come out ordered for generic orbits; enforce it on the
    // means.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| exponents[b].partial_cmp(&exponents[a]).expect("finite"));
    let orbits = ok.len();
    Ok(LyapunovEstimate {
        exponents: order.iter().map(|&i| exponents[i]).collect(),
        stderr: order.iter().map(|&i| stderr[i]).collect(),
        traces: ok.into_iter().map(|r| r.0).collect(),
        log_det,
        log_det_stderr,
        n_steps,
        orbits,
        dropped,
        qr_period,
        seed,
    })
}

/// Start points drawn from the cloud with probability proportional to
/// weight.
fn resample(cloud: &WeightedCloud, count: usize, seed: u64) -> Vec<Point> {
    let mut cdf = Vec::with_capacity(cloud.len());
    let mut acc = 0.0;
    for w in &cloud.weights {
        acc += w;
        cdf.push(acc);
    }
    let mut rng = chunk_rng(seed, 0);
    (0..count)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let i = cdf.partition_point(|c| *c < u).min(cloud.len() - 1);
            cloud.points[i].clone()
        })
        .collect()
}

/// Lyapunov exponents of `f` from orbits started at cloud points, with QR
/// re-orthonormalization every step.
pub fn lyapunov_qr(f: &RationalMap, cloud: &WeightedCloud, n_steps: usize, precision: Precision, seed: u64) -> Result<LyapunovEstimate> {
    lyapunov_qr_with(f, cloud, n_steps, precision, seed, LyapunovOptions::default())
}

pub fn lyapunov_qr_with(
    f: &RationalMap,
    cloud: &WeightedCloud,
    n_steps: usize,
    precision: Precision,
    seed: u64,
    opts: LyapunovOptions,
) -> Result<LyapunovEstimate> {
    check_args(n_steps, opts)?;
    if cloud.is_empty() {
        return Err(Error::invalid("empty cloud"));
    }
    let starts = resample(cloud, opts.orbits, seed);
    let results = if precision.is_double() {
        let cv: CompiledVector<f64> = f.lift().compile(precision);
        par_map(&starts, |_, z| pushed_orbit(&cv, z, n_steps, opts.qr_period))
    } else {
        let cv: CompiledVector<Mp> = f.lift().compile(precision);
        par_map(&starts, |_, z| pushed_orbit(&cv, z, n_steps, opts.qr_period))
    };
    summarize(results, n_steps, opts.qr_period, seed)
}

/// Lyapunov exponents along orbits supplied by a coding, which stay on the
/// support of `μ` however long they are.
pub fn lyapunov_coded(f: &RationalMap, orbits: &[Vec<Point>], qr_period: usize, seed: u64) -> Result<LyapunovEstimate> {
    let n_steps = orbits.first().map_or(0, |o| o.len());
    check_args(
        n_steps,
        LyapunovOptions {
            orbits: orbits.len(),
            qr_period,
        },
    )?;
    if orbits.iter().any(|o| o.len() != n_steps) {
        return Err(Error::invalid("orbits must have equal length"));
    }
    let cv: CompiledVector<f64> = f.lift().compile(Precision::DOUBLE);
    let results = par_map(orbits, |_, o| coded_orbit(&cv, o, qr_period));
    summarize(results, n_steps, qr_period, seed)
}

fn check_args(n_steps: usize, opts: LyapunovOptions) -> Result<()> {
    if n_steps < 10 {
        return Err(Error::invalid("n_steps must be at least 10"));
    }
    if opts.qr_period == 0 {
        return Err(Error::invalid("QR period must be positive"));
    }
    if opts.orbits < MIN_ORBITS {
        return Err(Error::invalid(format!("at least {MIN_ORBITS} orbits are needed")));
    }
    Ok(())
}

/// `log|det D|` at a point, for cross-checks against the exponent sum.
pub fn log_abs_det(f: &RationalMap, z: &[Complex64]) -> Option<f64> {
    let cv: CompiledVector<f64> = f.lift().compile(Precision::DOUBLE);
    let s = step(&cv, &to_cx::<f64>(z, 53))?;
    Some(to_dmatrix(&s.d).determinant().norm().ln())
}
