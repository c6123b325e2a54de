use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BirationalPair, IndeterminacyData, RationalMap};
use crate::error::{Error, Result};
use crate::geometry::{fs_uniform, norm, normalize, Point};
use crate::numeric::{to_c64, to_cx, Precision};
use crate::poly::{CompiledVector, PolyVector};

/// `B_0 ∘ f` with `B_0 = diag(λ, ..., λ, 1, ..., 1)`, λ on the first `k - s`
/// coordinates.
pub fn contract_construct(f: &RationalMap, lambda: &BigRational, s: usize) -> Result<RationalMap> {
    let k = f.k();
    if lambda <= &BigRational::zero() || lambda > &BigRational::one() {
        return Err(Error::invalid("lambda must lie in (0, 1]"));
    }
    if s == 0 || s >= k {
        return Err(Error::invalid(format!("s must lie in [1, {}]", k - 1)));
    }
    let b0: Vec<Vec<BigRational>> = (0..=k)
        .map(|i| {
            (0..=k)
                .map(|j| match (i == j, i < k - s) {
                    (false, _) => BigRational::zero(),
                    (true, true) => lambda.clone(),
                    (true, false) => BigRational::one(),
                })
                .collect()
        })
        .collect();
    let lift = PolyVector::linear(&b0)?.compose(f.lift())?;
    let mut g = RationalMap::new(format!("{}_B0", f.label), lift)?;
    if let Some(d) = f.indeterminacy() {
        g = g.with_indeterminacy(d.clone());
    }
    Ok(g)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractionReport {
    pub lambda: f64,
    pub s: usize,
    /// Smallest tube ratio attained on the forward indeterminacy set.
    pub rho_i_plus: f64,
    /// Tube ratio `r` of `V`.
    pub r: f64,
    /// Lower bound on the distance from the forward indeterminacy set to `V`.
    pub alpha: f64,
    pub max_ratio_b0_i_minus: f64,
    pub max_ratio_image_of_v: f64,
    /// Per step `n`, the smallest distance from the pushed witnesses to I⁺.
    pub orbit_min_distance: Vec<f64>,
    pub orbit_max_ratio: Vec<f64>,
    pub samples_in_v: usize,
}

/// `|z_{0..k-s}| / |z|`, the sine of the angle to `E = {z_0 = ... = z_{k-s-1} = 0}`.
pub fn tube_ratio(z: &[Complex64], s: usize) -> f64 {
    let k = z.len() - 1;
    norm(&z[..k - s]) / norm(z)
}

fn min_ratio_on(data: &IndeterminacyData, s: usize) -> f64 {
    if !data.frames().is_empty() {
        // Smallest singular value of the first k-s rows of each frame.
        return data
            .frames()
            .iter()
            .map(|b| {
                let rows = b[0].len() - s - 1;
                let m = DMatrix::from_fn(rows, b.len(), |i, j| b[j][i]);
                if b.len() > rows {
                    0.0
                } else {
                    m.svd(false, false).singular_values.iter().cloned().fold(f64::INFINITY, f64::min)
                }
            })
            .fold(f64::INFINITY, f64::min);
    }
    data.witnesses.iter().map(|w| tube_ratio(w, s)).fold(f64::INFINITY, f64::min)
}

/// Checks that `V = {tube_ratio < r}` with `r = rho/2` contains `B_0(I⁻)`
/// and `f_{B_0}(V)` (on `samples` random points of `V`), and that the
/// `f_{B_0}`-orbits of the I⁻ witnesses stay in `V` for `n_orbit` steps.
pub fn verify_contraction(
    pair: &BirationalPair,
    f_b0: &RationalMap,
    lambda: f64,
    s: usize,
    samples: usize,
    n_orbit: usize,
    seed: u64,
) -> Result<ContractionReport> {
    let k = pair.k();
    let i_plus = pair.i_plus().ok_or(Error::invalid("forward indeterminacy data required"))?;
    let i_minus = pair.i_minus().ok_or(Error::invalid("backward indeterminacy data required"))?;
    let rho = min_ratio_on(i_plus, s);
    if !(rho > 0.0) {
        return Err(Error::ContractionNotVerified("E meets the forward indeterminacy set".into()));
    }
    let r = rho / 2.0;
    let alpha = (rho.asin() - r.asin()).sin();
    let nb = k - s;
    let b0 = |z: &[Complex64]| -> Point {
        let v: Point = z.iter().enumerate().map(|(i, c)| if i < nb { c * lambda } else { *c }).collect();
        normalize(&v).expect("B0 invertible")
    };
    let max_b0 = i_minus.witnesses.iter().map(|w| tube_ratio(&b0(w), s)).fold(0.0, f64::max);
    if max_b0 >= r {
        return Err(Error::ContractionNotVerified(format!(
            "B0(I-) reaches tube ratio {max_b0:.3e} >= r = {r:.3e}"
        )));
    }

    let cv: CompiledVector<f64> = f_b0.lift().compile(Precision::DOUBLE);
    let push = |z: &[Complex64]| -> Option<Point> {
        let v = cv.eval(&to_cx::<f64>(z, 53));
        normalize(&to_c64(&v))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_img: f64 = 0.0;
    for _ in 0..samples {
        let z = sample_in_tube(k, s, r, &mut rng);
        let w = push(&z).ok_or(Error::ContractionNotVerified("V meets the indeterminacy set".into()))?;
        max_img = max_img.max(tube_ratio(&w, s));
    }
    if max_img >= r {
        return Err(Error::ContractionNotVerified(format!(
            "f_B0(V) reaches tube ratio {max_img:.3e} >= r = {r:.3e}"
        )));
    }

    let mut cur: Vec<Point> = i_minus.witnesses.iter().map(|w| b0(w)).collect();
    let mut orbit_min_distance = Vec::with_capacity(n_orbit);
    let mut orbit_max_ratio = Vec::with_capacity(n_orbit);
    for n in 1..=n_orbit {
        cur = cur
            .iter()
            .map(|z| push(z).ok_or(Error::OrbitHitsIndeterminacy { step: n }))
            .collect::<Result<_>>()?;
        let dmin = cur.iter().map(|z| i_plus.distance(z)).fold(f64::INFINITY, f64::min);
        let rmax = cur.iter().map(|z| tube_ratio(z, s)).fold(0.0, f64::max);
        orbit_min_distance.push(dmin);
        orbit_max_ratio.push(rmax);
        if rmax >= r || dmin < alpha {
            return Err(Error::ContractionNotVerified(format!("orbit leaves V at step {n}")));
        }
    }
    Ok(ContractionReport {
        lambda,
        s,
        rho_i_plus: rho,
        r,
        alpha,
        max_ratio_b0_i_minus: max_b0,
        max_ratio_image_of_v: max_img,
        orbit_min_distance,
        orbit_max_ratio,
        samples_in_v: samples,
    })
}

/// Random point of `V` with tube ratio spread over `[0, r)`.
fn sample_in_tube(k: usize, s: usize, r: f64, rng: &mut ChaCha8Rng) -> Point {
    let nb = k - s;
    let g = fs_uniform(k, rng);
    let a = normalize(&g[..nb]).unwrap_or_else(|| vec![Complex64::new(1.0, 0.0); nb]);
    let b = normalize(&g[nb..]).unwrap_or_else(|| vec![Complex64::new(1.0, 0.0); k + 1 - nb]);
    let t: f64 = r * rng.random_range(0.0..1.0f64).sqrt().min(1.0 - 1e-12);
    let c = (1.0 - t * t).sqrt();
    a.iter().map(|x| x * t).chain(b.iter().map(|x| x * c)).collect()
}

/// Conjugated P³ example with `E = {z_0 = z_1 = 0}` disjoint from I⁺ and
/// from `f(E)` transverse to the fixed plane of `B_0`.
pub fn p3_contract_coordinates() -> super::RatMatrix {
    super::linalg::mat_from_ints(&[&[1, 0, 0, 0], &[0, 0, 0, 1], &[-1, 1, 0, 0], &[0, 0, 1, -1]])
}

#[cfg(test)]
mod tests {
    use super::super::{catalog, conjugate_pair};
    use super::*;
    use num_bigint::BigInt;

    fn p3_conj() -> BirationalPair {
        conjugate_pair(&catalog::p3_example(), &p3_contract_coordinates(), "p3_contract").unwrap()
    }

    #[test]
    fn lambda_one_leaves_map_unchanged() {
        let pair = p3_conj();
        let g = contract_construct(&pair.forward, &BigRational::one(), 1).unwrap();
        assert_eq!(g.lift(), pair.forward.lift());
    }

    #[test]
    fn small_lambda_verifies_on_p3() {
        let pair = p3_conj();
        let lam = BigRational::new(BigInt::from(1), BigInt::from(1000));
        let g = contract_construct(&pair.forward, &lam, 1).unwrap();
        let rep = verify_contraction(&pair, &g, 1e-3, 1, 2000, 20, 7).unwrap();
        assert!(rep.alpha > 0.0);
        assert!(rep.orbit_min_distance.iter().all(|d| *d >= rep.alpha));
    }

    #[test]
    fn verification_is_monotone_in_lambda() {
        let pair = p3_conj();
        let flags: Vec<bool> = [2i64, 4, 10, 100, 1000]
            .iter()
            .map(|&den| {
                let lam = BigRational::new(BigInt::from(1), BigInt::from(den));
                let g = contract_construct(&pair.forward, &lam, 1).unwrap();
                verify_contraction(&pair, &g, 1.0 / den as f64, 1, 1000, 20, 3).is_ok()
            })
            .collect();
        assert!(flags.windows(2).all(|w| !w[0] || w[1]), "{flags:?}");
        assert!(*flags.last().unwrap());
    }
}
