//! Seed derivation. Every random draw in the crate flows from a single suite
//! seed through these helpers; nothing reads wall-clock entropy.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed, e.g. a per-episode seed from
/// `(suite seed, episode index)`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(parent);
    rng.set_stream(index);
    rng.next_u64()
}

/// A uniform draw in `[0, 1)` that is a pure function of its key. Used for
/// per-object, per-step noise decisions so that results do not depend on the
/// order in which objects are visited.
pub fn keyed_unit(seed: u64, a: u64, b: u64, tag: u64) -> f64 {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&a.to_le_bytes());
    key[16..24].copy_from_slice(&b.to_le_bytes());
    key[24..].copy_from_slice(&tag.to_le_bytes());
    ChaCha8Rng::from_seed(key).gen::<f64>()
}
