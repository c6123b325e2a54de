use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::catalog::with_witnesses;
use super::{IndeterminacyData, RationalMap, WitnessSource};
use crate::error::{Error, Result};
use crate::geometry::{fs_uniform, norm, normalize, Point};
use crate::numeric::Precision;
use crate::poly::CompiledVector;

/// Residual threshold `|F(w)| / |w|^d` for accepting a witness.
pub const WITNESS_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub starts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

/// Witnesses for the indeterminacy locus of `f`.
///
/// Stored exact components are sampled directly. Otherwise the numerical
/// search of [`search_indeterminacy`] is used and the result is marked as
/// heuristic.
pub fn indeterminacy_witnesses(f: &RationalMap, budget: usize, seed: u64) -> Result<IndeterminacyData> {
    if budget == 0 {
        return Err(Error::invalid("budget must be at least 1"));
    }
    if let Some(d) = f.indeterminacy() {
        if d.source == WitnessSource::Exact {
            if d.has_components() {
                return Ok(with_witnesses(d.clone(), budget, seed));
            }
            if d.is_empty() {
                return Ok(d.clone());
            }
        }
    }
    search_indeterminacy(
        f,
        &SearchOptions {
            starts: budget,
            max_iter: 200,
            seed,
        },
    )
}

/// Damped Gauss–Newton (Levenberg–Marquardt) on `{F_i = 0}` intersected
/// with `r` random hyperplanes and an affine normalization. Dimensions `r`
/// are tried from `k-1` down to 0; the first that yields solutions gives the
/// declared dimension.
pub fn search_indeterminacy(f: &RationalMap, opts: &SearchOptions) -> Result<IndeterminacyData> {
    let k = f.k();
    let cv: CompiledVector<f64> = f.lift().compile(Precision::DOUBLE);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for r in (0..k).rev() {
        let mut found: Vec<Point> = Vec::new();
        for _ in 0..opts.starts {
            let slices: Vec<Point> = (0..r).map(|_| fs_uniform(k, &mut rng)).collect();
            let norm_form = fs_uniform(k, &mut rng);
            let start = fs_uniform(k, &mut rng);
            if let Some(w) = solve(&cv, &slices, &norm_form, start, opts.max_iter) {
                if !found.iter().any(|p| crate::geometry::fs_distance(p, &w) < 1e-6) || r > 0 {
                    found.push(w);
                }
            }
        }
        if !found.is_empty() {
            let mut d = IndeterminacyData::from_witnesses(found, r as i32, WitnessSource::Sampled);
            d.heuristic = true;
            return Ok(d);
        }
    }
    Err(Error::NoneFound { budget: opts.starts * k })
}

fn residual(cv: &CompiledVector<f64>, slices: &[Point], ell: &[Complex64], z: &[Complex64]) -> (DVector<Complex64>, DMatrix<Complex64>) {
    let n = z.len();
    let zc: Vec<crate::numeric::Cx<f64>> = z.iter().map(|c| crate::numeric::Cx::new(c.re, c.im)).collect();
    let (v, j) = cv.eval_with_jacobian(&zc);
    let m = n + slices.len() + 1;
    let mut g = DVector::from_element(m, Complex64::new(0.0, 0.0));
    let mut jac = DMatrix::from_element(m, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        g[i] = v[i].to_c64();
        for c in 0..n {
            jac[(i, c)] = j[i][c].to_c64();
        }
    }
    for (s, h) in slices.iter().enumerate() {
        let row = n + s;
        g[row] = h.iter().zip(z).map(|(a, b)| a * b).sum();
        for c in 0..n {
            jac[(row, c)] = h[c];
        }
    }
    let row = m - 1;
    g[row] = ell.iter().zip(z).map(|(a, b)| a * b).sum::<Complex64>() - 1.0;
    for c in 0..n {
        jac[(row, c)] = ell[c];
    }
    (g, jac)
}

fn solve(cv: &CompiledVector<f64>, slices: &[Point], ell: &[Complex64], start: Point, max_iter: usize) -> Option<Point> {
    let n = start.len();
    // Put the start on the normalization hyperplane.
    let s: Complex64 = ell.iter().zip(&start).map(|(a, b)| a * b).sum();
    if s.norm() < 1e-8 {
        return None;
    }
    let mut z: Point = start.iter().map(|c| c / s).collect();
    let mut mu = 1e-3;
    let (mut g, mut jac) = residual(cv, slices, ell, &z);
    let mut cost = g.norm_squared();
    for _ in 0..max_iter {
        let jh = jac.adjoint();
        let mut a = &jh * &jac;
        for i in 0..n {
            a[(i, i)] += Complex64::new(mu, 0.0);
        }
        let rhs = -(&jh * &g);
        let step = a.lu().solve(&rhs)?;
        let trial: Point = z.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let (g2, j2) = residual(cv, slices, ell, &trial);
        let c2 = g2.norm_squared();
        if c2 < cost {
            z = trial;
            g = g2;
            jac = j2;
            cost = c2;
            mu = (mu * 0.3).max(1e-15);
        } else {
            mu *= 10.0;
            if mu > 1e12 {
                break;
            }
        }
        if cost < 1e-30 {
            break;
        }
    }
    let w = normalize(&z)?;
    let wc: Vec<crate::numeric::Cx<f64>> = w.iter().map(|c| crate::numeric::Cx::new(c.re, c.im)).collect();
    let fv: Vec<Complex64> = cv.eval(&wc).iter().map(|c| c.to_c64()).collect();
    (norm(&fv) < WITNESS_TOL).then_some(w)
}

#[cfg(test)]
mod tests {
    use super::super::catalog;
    use super::*;
    use crate::poly::PolyVector;

    fn stripped(f: &RationalMap) -> RationalMap {
        RationalMap::new(f.label.clone(), PolyVector::clone(f.lift())).unwrap()
    }

    #[test]
    fn numeric_search_finds_henon_point() {
        let f = stripped(&catalog::henon_default().forward);
        let d = search_indeterminacy(
            &f,
            &SearchOptions {
                starts: 20,
                max_iter: 300,
                seed: 5,
            },
        )
        .unwrap();
        assert_eq!(d.declared_dim, 0);
        assert!(d.heuristic);
        let target = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        for w in &d.witnesses {
            assert!(crate::geometry::fs_distance(w, &target) < 1e-4);
        }
    }

    #[test]
    fn numeric_search_finds_p3_line() {
        let f = stripped(&catalog::p3_example().forward);
        let d = search_indeterminacy(
            &f,
            &SearchOptions {
                starts: 10,
                max_iter: 300,
                seed: 9,
            },
        )
        .unwrap();
        assert_eq!(d.declared_dim, 1);
        for w in &d.witnesses {
            assert!(w[1].norm() < 1e-4 && w[2].norm() < 1e-4);
        }
    }

    #[test]
    fn power_map_search_finds_nothing() {
        let f = stripped(&catalog::power_map(2, 2).unwrap());
        let r = search_indeterminacy(
            &f,
            &SearchOptions {
                starts: 10,
                max_iter: 100,
                seed: 1,
            },
        );
        assert!(matches!(r, Err(Error::NoneFound { .. })));
    }

    #[test]
    fn exact_witnesses_have_tiny_residuals() {
        for p in [catalog::henon_default(), catalog::cremona(), catalog::p3_example()] {
            for f in [&p.forward, &p.inverse] {
                let d = indeterminacy_witnesses(f, 16, 3).unwrap();
                assert!(!d.witnesses.is_empty());
                let cv: CompiledVector<f64> = f.lift().compile(Precision::DOUBLE);
                for w in &d.witnesses {
                    let wc: Vec<_> = w.iter().map(|c| crate::numeric::Cx::new(c.re, c.im)).collect();
                    let r: Vec<Complex64> = cv.eval(&wc).iter().map(|c| c.to_c64()).collect();
                    assert!(norm(&r) < WITNESS_TOL);
                }
            }
        }
    }

    #[test]
    fn holomorphic_map_has_empty_locus() {
        let f = catalog::power_map(2, 3).unwrap();
        let d = indeterminacy_witnesses(&f, 4, 0).unwrap();
        assert!(d.is_empty());
        assert!(f.is_holomorphic());
    }
}
