//! Counter-based random stream used by forest training.
//!
//! Output `k` of a stream is `mix64(key + (k + 1) * GAMMA)`, where `mix64` is
//! the SplitMix64 finalizer and `GAMMA = 0x9E3779B97F4A7C15`. This is exactly
//! SplitMix64 started from state `key`, written so that any position can be
//! computed without replaying the stream. The key of tree `t` under forest
//! seed `s` is `mix64(s ^ mix64(t + GAMMA))`. All arithmetic is wrapping
//! 64-bit, so streams are identical on every platform.
//!
//! Bounded draws use rejection sampling on the top bits (see [`TreeRng::below`]),
//! which again only depends on the raw `u64` sequence.

pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct TreeRng {
    key: u64,
    counter: u64,
}

impl TreeRng {
    /// Independent stream for tree `tree_index` of a forest seeded with `seed`.
    pub fn for_tree(seed: u64, tree_index: u64) -> Self {
        TreeRng {
            key: mix64(seed ^ mix64(tree_index.wrapping_add(GAMMA))),
            counter: 0,
        }
    }

    pub fn from_key(key: u64) -> Self {
        TreeRng { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        let n = n as u64;
        // reject the tail of the u64 range that would bias the modulo
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return (x % n) as usize;
            }
        }
    }

    /// `k` distinct indices from `0..n` by partial Fisher-Yates, returned sorted.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }
}
