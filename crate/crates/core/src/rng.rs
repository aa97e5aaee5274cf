//! Seed derivation and PRNG construction.
//!
//! A run owns one root seed; every independent task (a sample draw, a stage,
//! a grid point) gets its own ChaCha stream seeded from a stable hash of
//! `(root, tags...)`. Results are therefore independent of scheduling and
//! reproducible bit for bit.

use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable, order-sensitive mix of a root seed and task tags.
pub fn derive_seed(root: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(root);
    for &t in tags {
        s = splitmix64(s ^ t);
    }
    s
}

/// Derive a seed from a textual task label (FNV-1a over the bytes, then mixed).
pub fn derive_seed_labeled(root: u64, label: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in label.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    derive_seed(root, &[h])
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_is_order_sensitive() {
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_ne!(derive_seed(1, &[2]), derive_seed(2, &[2]));
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
    }

    #[test]
    fn labeled_seeds_distinguish_labels() {
        assert_eq!(derive_seed_labeled(5, "a/b"), derive_seed_labeled(5, "a/b"));
        assert_ne!(derive_seed_labeled(5, "a/b"), derive_seed_labeled(5, "a/c"));
        assert_ne!(derive_seed_labeled(5, "a"), derive_seed_labeled(6, "a"));
    }
}
