//! Deterministic stream splitting for reproducible Monte Carlo runs.
//!
//! Every replicate gets its own generator derived from (seed, salt, index),
//! so results do not depend on how replicates are scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; good avalanche behaviour for key derivation.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Generator for one replicate of one named stream.
pub fn derive_rng(seed: u64, salt: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let a = mix64(seed ^ mix64(salt));
    let b = mix64(a ^ index);
    let c = mix64(b ^ 0x5851f42d4c957f2d);
    let d = mix64(c ^ salt);
    key[0..8].copy_from_slice(&a.to_le_bytes());
    key[8..16].copy_from_slice(&b.to_le_bytes());
    key[16..24].copy_from_slice(&c.to_le_bytes());
    key[24..32].copy_from_slice(&d.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Stream salts, one per consumer, so identical seeds never share a stream.
pub mod salt {
    pub const RANDTEST: u64 = 0x7261_6e64_7465_7374;
    pub const SIM_ASSIGN: u64 = 0x7369_6d5f_6173_6767;
    pub const SIM_NOISE: u64 = 0x7369_6d5f_6e6f_6973;
    pub const GRAPH: u64 = 0x6772_6170_685f_6765;
    pub const PO_TABLE: u64 = 0x706f_5f74_6162_6c65;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = derive_rng(42, salt::RANDTEST, 7);
        let mut b = derive_rng(42, salt::RANDTEST, 7);
        let mut c = derive_rng(42, salt::RANDTEST, 8);
        let mut d = derive_rng(42, salt::SIM_NOISE, 7);
        let xa: u64 = a.gen();
        assert_eq!(xa, b.gen::<u64>());
        assert_ne!(xa, c.gen::<u64>());
        assert_ne!(xa, d.gen::<u64>());
    }

    #[test]
    fn mix64_spreads_small_inputs() {
        assert_ne!(mix64(0), mix64(1));
        assert_ne!(mix64(1), mix64(2));
    }
}
