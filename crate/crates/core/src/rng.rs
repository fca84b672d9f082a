//! Deterministic sub-seed derivation.
//!
//! Every random draw in a run flows from one run seed. Sub-seeds are
//! derived per (level, segment) so outputs never depend on worker
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; decorrelates nearby inputs.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for a (level, segment) slot of a run.
pub fn sub_seed(seed: u64, level: u64, segment: u64) -> u64 {
    mix(mix(seed ^ mix(level)) ^ mix(segment.wrapping_add(0x51_7C_C1_B7_27_22_0A_95)))
}

/// Seeded generator for a (level, segment) slot.
pub fn rng_for(seed: u64, level: u64, segment: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(seed, level, segment))
}
