//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream selected by
//! `(seed, stream)`. ChaCha is counter based, so the k-th word of a stream is a
//! pure function of `(seed, stream, k)` and independent of how work is split
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream id reserved for the long-edge count draw.
pub const STREAM_EDGE_COUNT: u64 = 0;
/// First stream id used for pair-draw chunks; chunk `i` uses `STREAM_PAIRS + i`.
pub const STREAM_PAIRS: u64 = 1 << 32;
/// Stream used by the per-pair reference sampler.
pub const STREAM_REFERENCE: u64 = 1 << 40;
/// Stream used for start/source sampling in measurements.
pub const STREAM_SAMPLING: u64 = 1 << 41;
/// Stream used for bootstrap resampling.
pub const STREAM_BOOTSTRAP: u64 = 1 << 42;
/// Stream used for the power-iteration start vector.
pub const STREAM_POWER: u64 = 1 << 43;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Stable hash of a sequence of words, independent of platform and toolchain.
pub fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &w| mix64(acc ^ mix64(w)))
}

/// `base ⊕ hash(parts)`.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    base ^ hash_words(parts)
}
