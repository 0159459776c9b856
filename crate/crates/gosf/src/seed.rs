//! Seed derivation for reproducible sampling.
//!
//! Every parallel workload in this crate draws its randomness from
//! counter-derived substreams of a single master seed, so results do not
//! depend on thread count or scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One SplitMix64 step.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a deterministic sub-seed from a master seed and a stream tag.
///
/// Distinct tags give statistically independent seeds; the mapping is pure,
/// so the same `(master, tag)` pair always yields the same sub-seed.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(tag.wrapping_add(0xa076_1d64_78bd_642f)))
}

/// RNG for the `index`-th substream of `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn substreams_are_deterministic_and_distinct() {
        let a: f64 = substream(7, 0).random();
        let a2: f64 = substream(7, 0).random();
        let b: f64 = substream(7, 1).random();
        assert_eq!(a, a2);
        assert_ne!(a, b);
    }

    #[test]
    fn derive_seed_separates_master_and_tag() {
        assert_ne!(derive_seed(1, 2), derive_seed(2, 1));
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
    }
}
