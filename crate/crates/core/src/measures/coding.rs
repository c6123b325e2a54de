//! Orbits of the equilibrium measure through a symbolic coding.
//!
//! Pushing floating points forward loses track of `μ` after a few dozen
//! steps, since the dynamics expands errors. For two model families the
//! measure has an explicit coding that yields orbit segments of any length
//! without that drift.
//!
//! * Power maps `[z_0^d : ... : z_k^d]`: `μ` is Haar measure on the torus
//!   `|z_i| = |z_0|`. Each angle is a uniform base-`d` expansion and the map
//!   shifts its digits.
//! * Real Hénon horseshoes `(x,y) -> (y, y^2 + c - δx)`: the Julia set is a
//!   real Cantor set conjugate to the full two-shift, and `μ` is the
//!   `(1/2, 1/2)` Bernoulli measure. The orbit `y_n` with signs `s_n` is the
//!   fixed point of `y_n = s_n sqrt(y_{n+1} + δ y_{n-1} - c)`, a contraction
//!   on the horseshoe box.

use std::f64::consts::TAU;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{CloudMeta, WeightedCloud};
use crate::error::{Error, Result};
use crate::geometry::{normalize, Point};
use crate::maps::{catalog, RationalMap};
use crate::stream::par_indexed;

/// Symbols added on each side of a horseshoe window.
const PADDING: usize = 128;
const MAX_SWEEPS: usize = 500;
/// Base-`d` digits that feed one angle.
const DIGITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Coding {
    Circle { k: usize, d: u32 },
    Horseshoe { c: f64, delta: f64 },
}

impl Coding {
    /// The coding of `f`, if `f` is a power map or a real horseshoe Hénon
    /// map in the catalog coordinates.
    pub fn for_map(f: &RationalMap) -> Option<Coding> {
        let k = f.k();
        let d = f.degree();
        if let Ok(p) = catalog::power_map(k, d) {
            if p.lift() == f.lift() && d >= 2 {
                return Some(Coding::Circle { k, d });
            }
        }
        if k == 2 && d == 2 {
            let comp = &f.lift().components()[1];
            let coef = |e: &[u32]| comp.terms().find(|(m, _)| m.0.as_slice() == e).map(|(_, q)| q.clone());
            let (c, delta) = (coef(&[0, 0, 2])?, -coef(&[1, 0, 1])?);
            let h = catalog::henon(c.clone(), delta.clone()).ok()?;
            if h.forward.lift() == f.lift() {
                let coding = Coding::Horseshoe {
                    c: c.to_f64()?,
                    delta: delta.to_f64()?,
                };
                return coding.validate().ok().map(|_| coding);
            }
        }
        None
    }

    pub fn name(&self) -> &'static str {
        match self {
            Coding::Circle { .. } => "circle-coding",
            Coding::Horseshoe { .. } => "horseshoe-coding",
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Coding::Circle { k, .. } => *k,
            Coding::Horseshoe { .. } => 2,
        }
    }

    /// Checks the parameters. A Hénon map is a horseshoe when
    /// `c < -(5 + 2 sqrt 5)(1 + |δ|)^2 / 4`; the fixed-point iteration
    /// additionally needs `(1 + |δ|) / (2 sqrt(m)) < 1`, with `m` the least
    /// value of the square-root argument on the box `|y| <= R`.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Coding::Circle { k, d } => {
                if k == 0 || d < 2 {
                    return Err(Error::invalid("circle coding needs k >= 1 and d >= 2"));
                }
            }
            Coding::Horseshoe { c, delta } => {
                let a = 1.0 + delta.abs();
                if !(delta != 0.0 && c < -(5.0 + 2.0 * 5f64.sqrt()) * a * a / 4.0) {
                    return Err(Error::invalid(format!("c = {c}, delta = {delta} is not a horseshoe")));
                }
                let m = -c - a * box_radius(c, delta);
                if !(m > 0.0 && a / (2.0 * m.sqrt()) < 1.0) {
                    return Err(Error::invalid("horseshoe coding does not contract for these parameters"));
                }
            }
        }
        Ok(())
    }

    /// `count` orbit segments `x, f(x), ..., f^{len-1}(x)` with `x ~ μ`.
    pub fn orbits(&self, count: usize, len: usize, seed: u64) -> Result<Vec<Vec<Point>>> {
        self.validate()?;
        if count == 0 || len == 0 {
            return Err(Error::invalid("count and length must be positive"));
        }
        Ok(match *self {
            Coding::Circle { k, d } => par_indexed(seed, count, |_, rng| circle_orbit(k, d, len, rng)),
            Coding::Horseshoe { c, delta } => par_indexed(seed, count, |_, rng| horseshoe_orbit(c, delta, len, rng)),
        })
    }

    /// Equal-weight cloud of `m` points of `μ`.
    pub fn cloud(&self, label: &str, m: usize, seed: u64) -> Result<WeightedCloud> {
        let points = self.orbits(m, 1, seed)?.into_iter().map(|mut o| o.remove(0)).collect();
        let meta = CloudMeta {
            label: label.into(),
            l: self.k().min(1),
            n: 0,
            m,
            seed,
            estimator: self.name().into(),
            normalizer: None,
            normalizer_stderr: None,
            dropped_mass: 0.0,
            ess: 0.0,
        };
        WeightedCloud::equal(points, meta)
    }
}

/// Radius of the box `|x|, |y| <= R` that contains the real Julia set.
fn box_radius(c: f64, delta: f64) -> f64 {
    let a = 1.0 + delta.abs();
    (a + (a * a - 4.0 * c).sqrt()) / 2.0
}

fn circle_orbit(k: usize, d: u32, len: usize, rng: &mut impl Rng) -> Vec<Point> {
    let digits: Vec<Vec<u32>> = (0..k).map(|_| (0..len + DIGITS).map(|_| rng.random_range(0..d)).collect()).collect();
    let scale = 1.0 / d as f64;
    (0..len)
        .map(|n| {
            let mut z = vec![Complex64::new(1.0, 0.0)];
            for row in &digits {
                // Horner from the least significant digit keeps full accuracy.
                let theta = row[n..n + DIGITS].iter().rev().fold(0.0, |acc, &g| (acc + g as f64) * scale);
                z.push(Complex64::from_polar(1.0, TAU * theta));
            }
            normalize(&z).expect("unit coordinates")
        })
        .collect()
}

fn horseshoe_orbit(c: f64, delta: f64, len: usize, rng: &mut impl Rng) -> Vec<Point> {
    let total = len + 2 * PADDING + 1;
    let signs: Vec<f64> = (0..total).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let mut y = vec![0.0f64; total];
    for _ in 0..MAX_SWEEPS {
        let mut change = 0.0f64;
        for i in 0..total {
            let prev = if i == 0 { 0.0 } else { y[i - 1] };
            let next = if i + 1 == total { 0.0 } else { y[i + 1] };
            let v = signs[i] * (next + delta * prev - c).max(0.0).sqrt();
            change = change.max((v - y[i]).abs());
            y[i] = v;
        }
        if change <= 1e-15 {
            break;
        }
    }
    (PADDING + 1..PADDING + 1 + len)
        .map(|i| {
            let z = [Complex64::new(y[i - 1], 0.0), Complex64::new(y[i], 0.0), Complex64::new(1.0, 0.0)];
            normalize(&z).expect("finite point")
        })
        .collect()
}
