//! Deterministic RNG derivation.
//!
//! Every randomized stage (weight init, shuffling, dropout masks, splits,
//! calibration sampling) draws from a ChaCha8 stream derived from the run
//! seed plus a role label. Derivation goes through splitmix64 so that
//! nearby seeds and roles produce unrelated streams, and results are stable
//! across platforms and releases.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One splitmix64 step. Small, well-mixed, and stable by construction.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over a label, used to turn role names into stream ids.
fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derive a sub-seed for `(seed, role, index)`.
pub fn derive(seed: u64, role: &str, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ label_hash(role)) ^ index)
}

/// A seeded RNG for one role within a run.
pub fn rng(seed: u64, role: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, role, index))
}
