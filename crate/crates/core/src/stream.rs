//! Seeded, worker-count-independent random streams.
//!
//! Work items are grouped into fixed-size chunks; chunk `c` draws from the
//! ChaCha stream `c` of the run seed. Chunks are processed in parallel and
//! reassembled in index order, so results never depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const CHUNK: usize = 256;

/// Generator for chunk `chunk` of the run seeded by `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Seed for an independent sub-computation labelled `tag`.
pub fn child_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Computes `f(i, rng)` for `i in 0..n`, with `rng` the stream of the chunk
/// containing `i`. Output is in index order.
pub fn par_indexed<T, F>(seed: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c as u64);
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            (lo..hi).map(|i| f(i, &mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Parallel map over a slice without randomness, order preserved.
pub fn par_map<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(usize, &S) -> T + Sync,
{
    items.par_iter().enumerate().map(|(i, s)| f(i, s)).collect()
}
