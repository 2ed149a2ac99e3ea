//! Deterministic RNG derivation.
//!
//! Every source of randomness in a run derives from
//! `(run_seed, generation, slot, stream)` so that thread scheduling can
//! never change results: parallel and sequential execution draw from the
//! same per-slot streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keeping unrelated consumers on disjoint RNG streams.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const EVAL: u64 = 2;
    pub const SELECT: u64 = 3;
    pub const MUTATE: u64 = 4;
    pub const TRAIN: u64 = 5;
    pub const TRIAL: u64 = 6;
    pub const EXPLOIT: u64 = 7;
    pub const MEASURE: u64 = 8;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes an ordered tuple of counters into one 64-bit seed.
pub fn mix(parts: &[u64]) -> u64 {
    let mut h = 0x51_7c_c1_b7_27_22_0a_95u64;
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p));
    }
    h
}

/// A ChaCha8 generator seeded from the mixed tuple.
pub fn rng_for(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn mix_is_order_sensitive() {
        assert_ne!(mix(&[1, 2]), mix(&[2, 1]));
        assert_ne!(mix(&[0]), mix(&[0, 0]));
    }

    #[test]
    fn rng_reproducible() {
        let mut a = rng_for(&[7, 3, 1, stream::EVAL]);
        let mut b = rng_for(&[7, 3, 1, stream::EVAL]);
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn streams_are_disjoint() {
        let mut a = rng_for(&[7, 3, 1, stream::EVAL]);
        let mut b = rng_for(&[7, 3, 1, stream::TRAIN]);
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
