//! Seeded random streams. Every stochastic routine in the crate draws from
//! one of these so that runs are reproducible bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}
