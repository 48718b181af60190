//! Seed derivation for independent, reproducible random streams.
//!
//! Every strand, epoch and noise cell gets its own stream derived from the
//! master seed, so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one 64-bit key.
pub fn derive_key(seed: u64, words: &[u64]) -> u64 {
    words
        .iter()
        .fold(mix64(seed), |acc, &w| mix64(acc ^ mix64(w)))
}

/// Stream for `(seed, words...)`.
pub fn stream(seed: u64, words: &[u64]) -> Stream {
    Stream::seed_from_u64(derive_key(seed, words))
}

/// Stream used by strand `strand` during epoch `epoch`.
pub fn strand_stream(seed: u64, epoch: u64, strand: u64) -> Stream {
    stream(seed, &[0x5354_5241_4e44, epoch, strand])
}
