//! Shared fixtures for the benchmarks.

use greenlab_core::geometry::Point;
use greenlab_core::maps::{catalog, RationalMap};
use greenlab_core::measures::fs_uniform_sample;

pub fn henon() -> RationalMap {
    catalog::by_label("henon").expect("catalog map").forward().clone()
}

pub fn regular_c3() -> RationalMap {
    catalog::by_label("regular_c3").expect("catalog map").forward().clone()
}

/// `m` FS-uniform points of `P^k` from a fixed seed.
pub fn points(k: usize, m: usize) -> Vec<Point> {
    fs_uniform_sample(k, m, 11).expect("sampler")
}
