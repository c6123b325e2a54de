use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::fs_distance;
use crate::measures::WeightedCloud;

/// Atom label: shell, chart and grid cell in that chart.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomKey {
    pub shell: u32,
    pub chart: usize,
    /// Grid indices, or the raw coordinate bits when the mesh is finer than
    /// double precision resolves.
    pub cell: Vec<i64>,
    pub fine: bool,
}

/// Partition of a cloud into shells `V_n = {e^{-(n+1)} < s <= e^{-n}}`, each
/// cut by a grid in the standard affine charts. Points with `s = 0` lie
/// outside the domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManePartition {
    pub k: usize,
    pub shells: Vec<Option<u32>>,
    pub atoms: Vec<Option<usize>>,
    pub keys: Vec<AtomKey>,
}

impl ManePartition {
    pub fn atom_count(&self) -> usize {
        self.keys.len()
    }

    pub fn max_shell(&self) -> Option<u32> {
        self.shells.iter().flatten().copied().max()
    }

    /// Members of each atom, by atom id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.keys.len()];
        for (i, a) in self.atoms.iter().enumerate() {
            if let Some(a) = a {
                out[*a].push(i);
            }
        }
        out
    }
}

/// Side of a grid cell in shell `n`. A cube of this side in `R^{2k}` has
/// Euclidean diameter `e^{-(n+1)}`, and the chordal distance is at most the
/// Euclidean distance in an affine chart where the points have coordinates
/// of modulus at most one.
pub fn mesh(n: u32, k: usize) -> f64 {
    (-(n as f64 + 1.0)).exp() / ((2 * k) as f64).sqrt()
}

fn shell(s: f64) -> Option<u32> {
    (s > 0.0).then(|| (-s.ln()).floor().max(0.0) as u32)
}

fn atom_key(z: &[Complex64], shell: u32) -> AtomKey {
    let chart = (0..z.len())
        .max_by(|&a, &b| z[a].norm_sqr().total_cmp(&z[b].norm_sqr()))
        .expect("nonempty point");
    let h = mesh(shell, z.len() - 1);
    let fine = h < f64::EPSILON;
    let index = |x: f64| if fine { x.to_bits() as i64 } else { (x / h).floor() as i64 };
    let cell = (0..z.len())
        .filter(|&i| i != chart)
        .flat_map(|i| {
            let w = z[i] / z[chart];
            [index(w.re), index(w.im)]
        })
        .collect();
    AtomKey { shell, chart, cell, fine }
}

pub fn mane_partition(cloud: &WeightedCloud, s_values: &[f64]) -> Result<ManePartition> {
    if s_values.len() != cloud.len() {
        return Err(Error::invalid("one radius per cloud point"));
    }
    if s_values.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::invalid("radii must lie in [0, 1]"));
    }
    let k = cloud.points.first().map_or(1, |z| z.len() - 1);
    let shells: Vec<Option<u32>> = s_values.iter().map(|&s| shell(s)).collect();
    let mut ids: HashMap<AtomKey, usize> = HashMap::new();
    let mut keys = Vec::new();
    let atoms = cloud
        .points
        .iter()
        .zip(&shells)
        .map(|(z, sh)| {
            sh.map(|sh| {
                let key = atom_key(z, sh);
                *ids.entry(key.clone()).or_insert_with(|| {
                    keys.push(key);
                    keys.len() - 1
                })
            })
        })
        .collect();
    Ok(ManePartition { k, shells, atoms, keys })
}

/// `-sum ν(P) log ν(P)` over occupied atoms, with `ν` the cloud weights
/// renormalized to the domain `s > 0`.
pub fn partition_entropy(cloud: &WeightedCloud, p: &ManePartition) -> f64 {
    let mut mass = vec![0.0; p.keys.len()];
    for (a, w) in p.atoms.iter().zip(&cloud.weights) {
        if let Some(a) = a {
            mass[*a] += w;
        }
    }
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    mass.iter().filter(|m| **m > 0.0).map(|m| m / total).map(|q| -q * q.ln()).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterCheck {
    pub pairs: u64,
    pub violations: u64,
    /// Largest ratio of a same-atom distance to the smaller radius.
    pub worst_ratio: f64,
}

/// Checks `d(x, y) < s(y)` for every ordered pair in every atom.
pub fn diameter_check(cloud: &WeightedCloud, p: &ManePartition, s_values: &[f64]) -> DiameterCheck {
    let mut out = DiameterCheck {
        pairs: 0,
        violations: 0,
        worst_ratio: 0.0,
    };
    for members in p.members() {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let d = fs_distance(&cloud.points[i], &cloud.points[j]);
                let s = s_values[i].min(s_values[j]);
                out.pairs += 1;
                out.worst_ratio = out.worst_ratio.max(d / s);
                if d >= s {
                    out.violations += 1;
                }
            }
        }
    }
    out
}

/// Radius with a non-integrable logarithm: `exp(-1 / u)` with
/// `u = d(x, x0)^{2k}`, which is uniform on `[0, 1]` under the
/// Fubini-Study volume. `u` is cut off below at `u_min`.
pub fn singular_radius(z: &[Complex64], x0: &[Complex64], u_min: f64) -> f64 {
    let k = z.len() - 1;
    let u = fs_distance(z, x0).powi(2 * k as i32).max(u_min);
    (-1.0 / u).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::measures::{fs_uniform_cloud, Coding};

    #[test]
    fn unit_radius_is_one_shell() {
        let cloud = fs_uniform_cloud("u", 2, 2000, 1).unwrap();
        let s = vec![1.0; cloud.len()];
        let p = mane_partition(&cloud, &s).unwrap();
        assert_eq!(p.max_shell(), Some(0));
        let h = partition_entropy(&cloud, &p);
        assert!(h > 0.0 && h <= (p.atom_count() as f64).ln() + 1e-12);
        assert_eq!(diameter_check(&cloud, &p, &s).violations, 0);
    }

    #[test]
    fn shells_follow_the_radius() {
        assert_eq!(shell(1.0), Some(0));
        assert_eq!(shell(0.5), Some(0));
        assert_eq!(shell((-1.0f64).exp() * 0.999), Some(1));
        assert_eq!(shell((-7.5f64).exp()), Some(7));
        assert_eq!(shell(0.0), None);
    }

    #[test]
    fn zero_radius_leaves_the_domain() {
        let cloud = fs_uniform_cloud("u", 1, 10, 2).unwrap();
        let mut s = vec![0.5; 10];
        s[3] = 0.0;
        let p = mane_partition(&cloud, &s).unwrap();
        assert_eq!(p.atoms[3], None);
        assert!(p.atoms.iter().enumerate().all(|(i, a)| i == 3 || a.is_some()));
        assert!(mane_partition(&cloud, &[0.5; 9]).is_err());
        assert!(mane_partition(&cloud, &[1.5; 10]).is_err());
    }

    #[test]
    fn atoms_in_one_shell_are_bounded_by_the_grid() {
        // At most (2 / mesh + 1)^{2k} cells per chart.
        let cloud = fs_uniform_cloud("u", 1, 5000, 3).unwrap();
        let s = vec![(-2.5f64).exp(); cloud.len()];
        let p = mane_partition(&cloud, &s).unwrap();
        let per_chart = (2.0 / mesh(2, 1) + 1.0).powi(2);
        assert!(p.atom_count() as f64 <= 2.0 * per_chart);
        assert_eq!(diameter_check(&cloud, &p, &s).violations, 0);
    }

    #[test]
    fn variable_radii_keep_the_diameter_property() {
        let cloud = Coding::Circle { k: 2, d: 2 }.cloud("p", 4000, 4).unwrap();
        let x0: Point = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        let s: Vec<f64> = cloud.points.iter().map(|z| 0.05 + 0.9 * fs_distance(z, &x0)).collect();
        let p = mane_partition(&cloud, &s).unwrap();
        let check = diameter_check(&cloud, &p, &s);
        assert!(check.pairs > 0);
        assert_eq!(check.violations, 0);
    }

    #[test]
    fn singular_truncations_grow() {
        let cloud = fs_uniform_cloud("u", 1, 4000, 5).unwrap();
        let x0: Point = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let mut prev = 0.0;
        for u_min in [0.5, 0.25, 0.125] {
            let s: Vec<f64> = cloud.points.iter().map(|z| singular_radius(z, &x0, u_min)).collect();
            let h = partition_entropy(&cloud, &mane_partition(&cloud, &s).unwrap());
            assert!(h > prev, "{u_min}: {h} <= {prev}");
            prev = h;
        }
    }

    #[test]
    fn doubling_separates_singular_from_smooth_radii() {
        // Singular radii put positive mass in singleton atoms, so each
        // doubling of the cloud adds entropy; a smooth radius saturates.
        let x0: Point = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let h = |m: usize, singular: bool| {
            let cloud = fs_uniform_cloud("u", 1, m, 6).unwrap();
            let s: Vec<f64> = cloud
                .points
                .iter()
                .map(|z| {
                    if singular {
                        singular_radius(z, &x0, 0.0)
                    } else {
                        0.05 + 0.9 * fs_distance(z, &x0)
                    }
                })
                .collect();
            partition_entropy(&cloud, &mane_partition(&cloud, &s).unwrap())
        };
        assert!(h(8000, true) - h(4000, true) > 0.2);
        assert!((h(8000, false) - h(4000, false)).abs() < 0.05);
    }
}
