//! Deterministic sub-stream derivation from one master seed.
//!
//! Every source of randomness (positions, shadowing, per-drop seeds) gets its
//! own tagged stream so that, e.g., adding users to a drop never perturbs the
//! shadowing draws of existing links.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const STREAM_POSITIONS: u64 = 1;
pub(crate) const STREAM_SHADOWING: u64 = 2;
pub(crate) const STREAM_TRIAL: u64 = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable (master, tag, index) -> seed mixing.
pub(crate) fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let a = splitmix64(master.wrapping_add(splitmix64(tag)));
    splitmix64(a.wrapping_add(splitmix64(index)))
}

pub(crate) fn stream(master: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag, index))
}
