//! Keyed, counter-based random streams.
//!
//! Every consumer of randomness derives its own ChaCha stream from
//! `(seed, domain, stream)`, so results never depend on the order in which
//! other parts of the program drew numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub mod domain {
    pub const SYNTH_CENTROIDS: u64 = 0x01;
    pub const SYNTH_EVAL: u64 = 0x02;
    pub const SYNTH_RETRIEVAL: u64 = 0x03;
    pub const SYNTH_DISTRACTOR: u64 = 0x04;
    pub const SYNTH_TEXT: u64 = 0x05;
    pub const KMEANS: u64 = 0x10;
    pub const EPISODE_TRAIN: u64 = 0x20;
    pub const EPISODE_VAL: u64 = 0x21;
    pub const EPISODE_TEST: u64 = 0x22;
    pub const PARAM_INIT: u64 = 0x30;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent generator for `(seed, domain, stream)`.
pub fn stream_rng(seed: u64, domain: u64, stream: u64) -> StreamRng {
    let mut key = [0u8; 32];
    let words = [
        splitmix64(seed),
        splitmix64(seed ^ splitmix64(domain)),
        splitmix64(domain.rotate_left(17) ^ 0xA076_1D64_78BD_642F),
        splitmix64(seed.rotate_left(32) ^ domain),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}
