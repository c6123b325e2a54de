//! Fubini–Study geometry on unit representatives in C^{k+1}.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type Point = Vec<Complex64>;

pub fn norm(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(z: &[Complex64]) -> Option<Point> {
    let n = norm(z);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some(z.iter().map(|c| c / n).collect())
}

/// Hermitian product `sum conj(a_i) b_i`.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Chordal distance `|x ^ y| / (|x| |y|)`, in [0, 1].
pub fn fs_distance(x: &[Complex64], y: &[Complex64]) -> f64 {
    let nx = norm(x);
    let ny = norm(y);
    let c = dot(x, y).norm() / (nx * ny);
    (1.0 - (c * c).min(1.0)).max(0.0).sqrt()
}

/// Gram–Schmidt orthonormalization; drops dependent vectors.
pub fn orthonormalize(vs: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        // Two passes for numerical orthogonality.
        for _ in 0..2 {
            for u in &out {
                let c = dot(u, &w);
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= c * ui;
                }
            }
        }
        let n = norm(&w);
        if n > 1e-12 * norm(v).max(1e-300) {
            out.push(w.iter().map(|c| c / n).collect());
        }
    }
    out
}

/// Distance from `x` to the projectivization of the span of an orthonormal
/// basis.
pub fn fs_distance_to_subspace(x: &[Complex64], basis: &[Point]) -> f64 {
    let nx2: f64 = x.iter().map(|c| c.norm_sqr()).sum();
    if nx2 == 0.0 {
        return 0.0;
    }
    let proj2: f64 = basis.iter().map(|b| dot(b, x).norm_sqr()).sum();
    (1.0 - (proj2 / nx2).min(1.0)).max(0.0).sqrt()
}

/// FS-uniform point: normalized standard complex Gaussian.
pub fn fs_uniform<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Point {
    loop {
        let z: Point = (0..=k)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        if let Some(u) = normalize(&z) {
            return u;
        }
    }
}

/// Random unit point of the projectivized span of `basis`.
pub fn random_in_span<R: Rng + ?Sized>(basis: &[Point], rng: &mut R) -> Point {
    let n = basis[0].len();
    loop {
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        for b in basis {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let c = Complex64::new(re, im);
            for (zi, bi) in z.iter_mut().zip(b) {
                *zi += c * bi;
            }
        }
        if let Some(u) = normalize(&z) {
            return u;
        }
    }
}

/// Index of the largest-modulus coordinate.
pub fn argmax_abs(z: &[Complex64]) -> usize {
    let mut best = 0;
    for (i, c) in z.iter().enumerate() {
        if c.norm_sqr() > z[best].norm_sqr() {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn distance_is_scale_free_and_bounded() {
        let x = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let y = vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 3.0)];
        assert!((fs_distance(&x, &y) - 1.0).abs() < 1e-15);
        let y2: Point = x.iter().map(|c| c * Complex64::new(0.0, 5.0)).collect();
        assert!(fs_distance(&x, &y2) < 1e-7);
    }

    #[test]
    fn subspace_distance_matches_point_distance_on_lines() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let a = fs_uniform(3, &mut rng);
        let x = fs_uniform(3, &mut rng);
        let d1 = fs_distance(&x, &a);
        let d2 = fs_distance_to_subspace(&x, &[a]);
        assert!((d1 - d2).abs() < 1e-12);
    }
}
