//! Seeded random streams.
//!
//! Every stochastic routine draws from ChaCha20 (`rand_chacha::ChaCha20Rng`)
//! seeded with `seed_from_u64(seed)`. Independent sub-streams (one per sample
//! record, per Monte Carlo trial block, ...) are obtained by selecting the
//! ChaCha stream number, so a dataset is identical regardless of the order or
//! thread on which its records are produced, and across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator for the root stream of `seed`.
pub fn seeded(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Generator for sub-stream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
