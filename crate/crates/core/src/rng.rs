//! Reproducible random streams.
//!
//! Every replica `k` of a batch seeded with `seed` draws from ChaCha8 stream
//! `k` of key `seed`. Streams are disjoint by construction, so replica results
//! do not depend on how replicas are spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Generator for replica `replica` of a batch keyed by `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Generator for single-stream uses (stream 0).
pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
