//! Seeded sampling helpers shared by the estimators.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws `count` distinct-endpoint pairs from `pool`.
pub(crate) fn pairs(pool: &[usize], count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(count);
    if pool.len() < 2 {
        return out;
    }
    let mut r = rng(seed);
    while out.len() < count {
        let i = pool[r.gen_range(0..pool.len())];
        let j = pool[r.gen_range(0..pool.len())];
        if i != j {
            out.push((i, j));
        }
    }
    out
}

/// Draws `count` distinct elements of `0..n` (all of them if `count >= n`), sorted.
pub(crate) fn subset(n: usize, count: usize, seed: u64) -> Vec<usize> {
    if count >= n {
        return (0..n).collect();
    }
    let mut r = rng(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = r.gen_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

/// Draws `count` tuples of `k` distinct elements of `pool`. Longer draws with
/// the same seed extend shorter ones.
pub(crate) fn tuples(pool: &[usize], count: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(count);
    if pool.len() < k {
        return out;
    }
    let mut r = rng(seed);
    while out.len() < count {
        let mut t: Vec<usize> = Vec::with_capacity(k);
        while t.len() < k {
            let v = pool[r.gen_range(0..pool.len())];
            if !t.contains(&v) {
                t.push(v);
            }
        }
        out.push(t);
    }
    out
}
