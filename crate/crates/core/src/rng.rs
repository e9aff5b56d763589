//! Counter-based randomness: every draw is addressed by
//! `(master seed, stream, counter)`, so a sample's bits do not depend on
//! which worker produced it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers, one per consumer, so different analyses that share
/// a master seed never reuse keystream.
pub mod stream {
    pub const SOURCE_SAMPLES: u64 = 1;
    pub const INFLUENCE: u64 = 2;
    pub const FIXEDNESS: u64 = 3;
    pub const COMPARE_ZEROED: u64 = 4;
    pub const CODE_SEARCH: u64 = 5;
    pub const ADVERSARY_SEARCH: u64 = 6;
}

/// Words of keystream reserved per counter value.
const WORDS_PER_COUNTER: u128 = 1 << 32;

/// A generator positioned at `(seed, stream, counter)`.
pub fn counter_rng(seed: u64, stream: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(counter as u128 * WORDS_PER_COUNTER);
    rng
}
