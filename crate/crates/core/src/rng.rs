//! Seeded random streams.
//!
//! Every chain, fold and emulator run owns a [`ChainRng`] derived from a `u64`
//! seed, so outputs are reproducible across platforms and worker counts.

use rand::SeedableRng;

/// The generator used throughout the crate.
pub type ChainRng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChainRng {
    ChainRng::seed_from_u64(seed)
}

/// Derives an independent child seed (one per fold, per replicate, ...) from a
/// master seed with a splitmix64 finalizer.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
