//! Seed derivation.
//!
//! Every random stream in the library is a `ChaCha8Rng` seeded from a 64-bit
//! value. Independent streams (rows of an experiment, chains for each stored
//! system) get their seeds from [`derive_seed`], which folds a list of
//! coordinates into the parent seed with the splitmix64 finalizer:
//!
//! ```text
//! h = parent
//! for each part p: h = splitmix64(h ^ splitmix64(p + GOLDEN))
//! ```
//!
//! so any single stream can be recreated from the master seed and its
//! coordinates alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random source used throughout the crate.
pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 output function.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes `parts` into `parent`, order-sensitively.
pub fn derive_seed(parent: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(parent), |h, &p| {
        splitmix64(h ^ splitmix64(p.wrapping_add(GOLDEN)))
    })
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
