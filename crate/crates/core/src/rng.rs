//! Seeded random streams.
//!
//! Every random draw in the engine comes from a [`ChaCha8Rng`] whose 64-bit
//! seed is derived from the experiment seed and a list of integer coordinates
//! (trial, session, purpose tag, ...). ChaCha8 is counter based and its output
//! is fixed across platforms, so a seed reproduces the same stream anywhere.
//!
//! Seed derivation folds each coordinate into the running state with the
//! SplitMix64 finalizer:
//!
//! ```text
//! state = base
//! for part in parts: state = mix(state ^ mix(part + 0x9E3779B97F4A7C15))
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags. Distinct tags keep substreams for different jobs disjoint.
pub mod tag {
    pub const FOLD_SLCV: u64 = 0x534c_4356; // "SLCV"
    pub const FOLD_ILCV: u64 = 0x494c_4356; // "ILCV"
    pub const TRIAL: u64 = 0x5452_4941;
    pub const HEAD_INIT: u64 = 0x494e_4954;
    pub const BATCH_ORDER: u64 = 0x4241_5443;
    pub const PROJECTION: u64 = 0x5052_4f4a;
    pub const CLASS_MEAN: u64 = 0x434d_4541;
    pub const DOMAIN_SHIFT: u64 = 0x444f_4d53;
    pub const SUBJECT_SHIFT: u64 = 0x5355_424a;
    pub const NOISE: u64 = 0x4e4f_4953;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(base, |state, &part| mix(state ^ mix(part.wrapping_add(GOLDEN))))
}

pub fn substream(base: u64, parts: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(base, parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_coordinates_same_stream() {
        let mut a = substream(42, &[1, 2]);
        let mut b = substream(42, &[1, 2]);
        for _ in 0..8 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }

    #[test]
    fn coordinates_are_order_sensitive() {
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
        assert_ne!(derive_seed(7, &[tag::FOLD_SLCV, 1]), derive_seed(7, &[tag::FOLD_ILCV, 1]));
    }

    #[test]
    fn derivation_is_pinned() {
        // Guards against accidental changes to the derivation, which would
        // silently change every fold assignment and synthetic stream.
        assert_eq!(derive_seed(0, &[]), 0);
        assert_eq!(derive_seed(0, &[0]), mix(mix(GOLDEN)));
    }
}
